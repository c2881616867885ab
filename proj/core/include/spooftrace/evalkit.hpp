#pragma once

#include <string>
#include <vector>

#include "spooftrace/tensor.hpp"
#include "spooftrace/trace_algebra.hpp"

namespace spooftrace {

struct ScoredSample {
  std::string id;
  double score = 0.0;
  bool is_spoof = false;
  std::string medium;  // category tag, empty for live
};

/// Train/test id partition for the known / unknown / open-set protocols.
struct ProtocolSplit {
  std::vector<int> train_ids;
  std::vector<int> test_ids;
  std::string held_out_medium;  // empty for the known protocol
};

enum class ProtocolMode { known, unknown, open_set };

ProtocolMode protocol_from_string(const std::string& s);
std::string to_string(ProtocolMode m);

/// Spoofness score: depth-map intensity plus weighted trace intensity
/// (entrywise L1 sums; 3-channel traces are additionally averaged over
/// channels).
template <typename S>
double spoof_score(const Tensor<S>& depth_map, const TraceSet<S>& tr, double alpha0) {
  auto l1 = [](const Tensor<S>& t) {
    double s = 0.0;
    for (std::int64_t i = 0; i < t.size(); ++i) s += std::abs(static_cast<double>(t[i]));
    return s;
  };
  const Shape4 sd = as4(depth_map);
  const double k2 = static_cast<double>(sd.h) * sd.w;
  const Shape4 st = as4(tr.P);
  const double n2 = static_cast<double>(st.h) * st.w;
  const double traces =
      l1(tr.B) / 3.0 + l1(tr.C) / 3.0 + l1(tr.T) / 3.0 + l1(tr.P);
  return l1(depth_map) / (2.0 * k2) + alpha0 * traces / (2.0 * n2);
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

struct AcerResult {
  double apcer = 0.0;
  double bpcer = 0.0;
  double acer = 0.0;
};

/// Equal error rate via a sweep over thresholds placed at midpoints between
/// consecutive distinct scores (plus the two extremes). Returns the rate and
/// threshold where |APCER - BPCER| is smallest; the reported EER is the mean
/// of the two rates there, so ACER at the returned threshold reproduces it.
EerResult compute_eer(const std::vector<ScoredSample>& samples);

/// APCER (spoof accepted as live), BPCER (live rejected) and their mean at a
/// fixed threshold; samples with score >= threshold are called spoof.
AcerResult compute_acer(const std::vector<ScoredSample>& samples, double threshold);

/// Highest spoof-detection rate with live false-detection rate <= fdr.
double tdr_at_fdr(const std::vector<ScoredSample>& samples, double fdr = 0.005);

/// Picks the alpha0 with the lowest EER on (train/validation) scored pairs of
/// (depth L1 term, trace L1 term); used by evaluation tooling.
double sweep_alpha0(const std::vector<double>& depth_terms,
                    const std::vector<double>& trace_terms, const std::vector<bool>& is_spoof,
                    const std::vector<double>& candidates);

}  // namespace spooftrace
