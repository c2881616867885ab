#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "spooftrace/tensor.hpp"

namespace spooftrace {

struct MediumClassifierConfig {
  int input_channels = 9;  // concatenated additive traces {B,C,T}
  int num_classes = 3;
  int image_size = 64;
  int iterations = 800;
  int batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 7;
};

/// Small CNN for spoof-medium classification on estimated additive traces
/// (or raw images, as a baseline). Built from the same conv blocks as the
/// main networks, with a global-pool + linear head.
class MediumClassifier {
 public:
  explicit MediumClassifier(const MediumClassifierConfig& cfg);
  ~MediumClassifier();
  MediumClassifier(MediumClassifier&&) noexcept;
  MediumClassifier& operator=(MediumClassifier&&) noexcept;

  void train(const std::vector<Tensor<float>>& inputs, const std::vector<int>& labels);

  /// Predicted class; throws if the classifier has not been trained.
  int classify(const Tensor<float>& input);
  std::vector<double> probabilities(const Tensor<float>& input);
  bool trained() const { return trained_; }

  double accuracy(const std::vector<Tensor<float>>& inputs, const std::vector<int>& labels);
  std::vector<std::vector<int>> confusion(const std::vector<Tensor<float>>& inputs,
                                          const std::vector<int>& labels);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  MediumClassifierConfig cfg_;
  bool trained_ = false;
};

}  // namespace spooftrace
