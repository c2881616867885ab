#pragma once

#include <string>
#include <vector>

#include "spooftrace/dataset.hpp"
#include "spooftrace/evalkit.hpp"
#include "spooftrace/nets.hpp"

namespace spooftrace {

/// Per-sample inference result: the two scoring terms plus the estimated
/// components needed by downstream tooling.
struct SampleEvaluation {
  std::string id;
  bool is_spoof = false;
  Medium medium = Medium::none;
  double depth_term = 0.0;  // |M|_1 / (2 K^2)
  double trace_term = 0.0;  //  (|B|_1/3 + |C|_1/3 + |T|_1/3 + |P|_1) / (2 N^2)
  double mean_abs_b = 0.0, mean_abs_c = 0.0, mean_abs_t = 0.0, mean_p = 0.0;
  TraceSet<float> traces;
  Tensor<float> depth;
  std::vector<float> f1_embedding, f2_embedding, f3_embedding;  // channel means
};

struct EvalOptions {
  int batch_size = 16;
  bool keep_traces = false;      // retain full trace tensors per sample
  bool keep_embeddings = false;  // retain pooled encoder features
};

/// Runs the generator in inference mode over the given samples.
std::vector<SampleEvaluation> evaluate_samples(Generator<float>& gen, const Dataset& ds,
                                               const std::vector<int>& ids,
                                               const EvalOptions& opts = {});

inline double score_of(const SampleEvaluation& e, double alpha0) {
  return e.depth_term + alpha0 * e.trace_term;
}

std::vector<ScoredSample> to_scored(const std::vector<SampleEvaluation>& evals, double alpha0);

/// 9-channel [N,N,9] stack of the additive traces, the classifier input.
Tensor<float> additive_trace_stack(const TraceSet<float>& traces);

/// Restores just the generator from a training checkpoint.
Generator<float> load_generator(const std::string& checkpoint_path);

}  // namespace spooftrace
