#include "spooftrace/inference.hpp"

#include "spooftrace/train.hpp"

namespace spooftrace {

namespace {

double l1_mean_channels(const Tensor<float>& t, int channels) {
  double s = 0.0;
  for (std::int64_t i = 0; i < t.size(); ++i) s += std::abs(static_cast<double>(t[i]));
  return s / channels;
}

std::vector<float> channel_means(const Tensor<float>& t) {
  const Shape4 s = as4(t);
  std::vector<float> out(static_cast<size_t>(s.c), 0.f);
  const std::int64_t pixels = t.size() / s.c;
  for (std::int64_t i = 0; i < pixels; ++i)
    for (int c = 0; c < s.c; ++c) out[static_cast<size_t>(c)] += t[i * s.c + c];
  for (auto& v : out) v /= static_cast<float>(pixels);
  return out;
}

}  // namespace

std::vector<SampleEvaluation> evaluate_samples(Generator<float>& gen, const Dataset& ds,
                                               const std::vector<int>& ids,
                                               const EvalOptions& opts) {
  const int n = gen.config().band.N;
  const int k = gen.config().depth_size();
  std::vector<SampleEvaluation> out;
  out.reserve(ids.size());

  for (size_t start = 0; start < ids.size(); start += opts.batch_size) {
    const size_t end = std::min(ids.size(), start + opts.batch_size);
    std::vector<const Tensor<float>*> imgs;
    for (size_t i = start; i < end; ++i) imgs.push_back(&ds.samples[ids[i]].image);
    GeneratorOutput<float> go = gen.forward(stack_batch(imgs), false);

    for (size_t i = start; i < end; ++i) {
      const int row = static_cast<int>(i - start);
      SampleEvaluation e;
      const DatasetSample& s = ds.samples[ids[i]];
      e.id = s.id;
      e.is_spoof = s.is_spoof;
      e.medium = s.medium;
      e.traces.B = slice_batch(go.traces.B.val(), row, row + 1);
      e.traces.C = slice_batch(go.traces.C.val(), row, row + 1);
      e.traces.T = slice_batch(go.traces.T.val(), row, row + 1);
      e.traces.P = slice_batch(go.traces.P.val(), row, row + 1);
      e.traces.I_P = slice_batch(go.traces.I_P.val(), row, row + 1);
      e.depth = slice_batch(go.depth.val(), row, row + 1);

      e.mean_abs_b = l1_mean_channels(e.traces.B, 3) / (static_cast<double>(n) * n);
      e.mean_abs_c = l1_mean_channels(e.traces.C, 3) / (static_cast<double>(n) * n);
      e.mean_abs_t = l1_mean_channels(e.traces.T, 3) / (static_cast<double>(n) * n);
      e.mean_p = l1_mean_channels(e.traces.P, 1) / (static_cast<double>(n) * n);
      e.depth_term = l1_mean_channels(e.depth, 1) / (2.0 * k * k);
      e.trace_term = 0.5 * (e.mean_abs_b + e.mean_abs_c + e.mean_abs_t + e.mean_p);

      if (opts.keep_embeddings) {
        e.f1_embedding = channel_means(slice_batch(go.f1.val(), row, row + 1));
        e.f2_embedding = channel_means(slice_batch(go.f2.val(), row, row + 1));
        e.f3_embedding = channel_means(slice_batch(go.f3.val(), row, row + 1));
      }
      if (!opts.keep_traces) {
        e.traces.B = Tensor<float>();
        e.traces.C = Tensor<float>();
        e.traces.T = Tensor<float>();
        e.traces.P = Tensor<float>();
        e.traces.I_P = Tensor<float>();
        e.depth = Tensor<float>();
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<ScoredSample> to_scored(const std::vector<SampleEvaluation>& evals, double alpha0) {
  std::vector<ScoredSample> out;
  out.reserve(evals.size());
  for (const auto& e : evals)
    out.push_back({e.id, score_of(e, alpha0), e.is_spoof,
                   e.is_spoof ? to_string(e.medium) : std::string()});
  return out;
}

Tensor<float> additive_trace_stack(const TraceSet<float>& traces) {
  const Shape4 s = as4(traces.B);
  if (s.b != 1) throw std::invalid_argument("additive_trace_stack: expected a single sample");
  Tensor<float> out({s.h, s.w, 9});
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const std::int64_t i = (static_cast<std::int64_t>(y) * s.w + x) * 3 + c;
        out.at(y, x, c) = traces.B[i];
        out.at(y, x, 3 + c) = traces.C[i];
        out.at(y, x, 6 + c) = traces.T[i];
      }
  return out;
}

Generator<float> load_generator(const std::string& checkpoint_path) {
  Trainer<float> t = Trainer<float>::restore(checkpoint_path);
  return std::move(t.generator());
}

}  // namespace spooftrace
