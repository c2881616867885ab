#include "spooftrace/medium_classifier.hpp"

#include <random>
#include <stdexcept>

#include "spooftrace/nn.hpp"
#include "spooftrace/optimizer.hpp"

namespace spooftrace {

struct MediumClassifier::Impl {
  ParamSet<float> params;
  ConvBlock<float> c0, c1, c2;
  Var<float> fc_w, fc_b;
  Optimizer<float> opt{OptimizerKind::adam};
  std::mt19937 rng;

  Impl(const MediumClassifierConfig& cfg) : rng(static_cast<std::uint32_t>(cfg.seed * 2654435761ULL)) {
    c0 = ConvBlock<float>(params, "cls.c0", 3, cfg.input_channels, 16, 2, rng);
    c1 = ConvBlock<float>(params, "cls.c1", 3, 16, 32, 2, rng);
    c2 = ConvBlock<float>(params, "cls.c2", 3, 32, 32, 2, rng);
    fc_w = params.add("cls.fc.w", normal_init<float>({32, cfg.num_classes}, rng, 0.05f));
    fc_b = params.add("cls.fc.b", Tensor<float>::zeros({cfg.num_classes}));
  }

  Var<float> forward(const Tensor<float>& batch, bool training) {
    Var<float> x = Var<float>::constant(batch);
    x = c2(c1(c0(x, training), training), training);
    return dense(global_avg_pool(x), fc_w, fc_b);
  }
};

MediumClassifier::MediumClassifier(const MediumClassifierConfig& cfg)
    : impl_(std::make_unique<Impl>(cfg)), cfg_(cfg) {}

MediumClassifier::~MediumClassifier() = default;
MediumClassifier::MediumClassifier(MediumClassifier&&) noexcept = default;
MediumClassifier& MediumClassifier::operator=(MediumClassifier&&) noexcept = default;

void MediumClassifier::train(const std::vector<Tensor<float>>& inputs,
                             const std::vector<int>& labels) {
  if (inputs.empty() || inputs.size() != labels.size())
    throw std::invalid_argument("medium classifier: inputs and labels must match");
  std::uniform_int_distribution<int> pick(0, static_cast<int>(inputs.size()) - 1);
  for (int it = 0; it < cfg_.iterations; ++it) {
    std::vector<const Tensor<float>*> batch;
    std::vector<int> batch_labels;
    for (int i = 0; i < cfg_.batch_size; ++i) {
      const int j = pick(impl_->rng);
      batch.push_back(&inputs[j]);
      batch_labels.push_back(labels[j]);
    }
    Var<float> logits = impl_->forward(stack_batch(batch), true);
    Var<float> loss = softmax_cross_entropy(logits, batch_labels);
    backward(loss);
    impl_->opt.step(impl_->params, cfg_.lr);
  }
  trained_ = true;
}

std::vector<double> MediumClassifier::probabilities(const Tensor<float>& input) {
  if (!trained_) throw std::runtime_error("medium classifier: not trained");
  std::vector<const Tensor<float>*> one{&input};
  Var<float> logits = impl_->forward(stack_batch(one), false);
  const Tensor<float>& l = logits.val();
  double m = l[0];
  for (std::int64_t i = 1; i < l.size(); ++i) m = std::max<double>(m, l[i]);
  double z = 0.0;
  std::vector<double> p(static_cast<size_t>(l.size()));
  for (std::int64_t i = 0; i < l.size(); ++i) z += std::exp(static_cast<double>(l[i]) - m);
  for (std::int64_t i = 0; i < l.size(); ++i)
    p[static_cast<size_t>(i)] = std::exp(static_cast<double>(l[i]) - m) / z;
  return p;
}

int MediumClassifier::classify(const Tensor<float>& input) {
  const auto p = probabilities(input);
  int best = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = static_cast<int>(i);
  return best;
}

double MediumClassifier::accuracy(const std::vector<Tensor<float>>& inputs,
                                  const std::vector<int>& labels) {
  int correct = 0;
  for (size_t i = 0; i < inputs.size(); ++i)
    if (classify(inputs[i]) == labels[i]) ++correct;
  return inputs.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(inputs.size());
}

std::vector<std::vector<int>> MediumClassifier::confusion(
    const std::vector<Tensor<float>>& inputs, const std::vector<int>& labels) {
  std::vector<std::vector<int>> m(static_cast<size_t>(cfg_.num_classes),
                                  std::vector<int>(static_cast<size_t>(cfg_.num_classes), 0));
  for (size_t i = 0; i < inputs.size(); ++i) m[labels[i]][classify(inputs[i])]++;
  return m;
}

}  // namespace spooftrace
