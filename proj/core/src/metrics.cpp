#include "spooftrace/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spooftrace {

ProtocolMode protocol_from_string(const std::string& s) {
  if (s == "known") return ProtocolMode::known;
  if (s == "unknown") return ProtocolMode::unknown;
  if (s == "open-set" || s == "open_set") return ProtocolMode::open_set;
  throw std::invalid_argument("unknown protocol: " + s);
}

std::string to_string(ProtocolMode m) {
  switch (m) {
    case ProtocolMode::known: return "known";
    case ProtocolMode::unknown: return "unknown";
    default: return "open-set";
  }
}

namespace {

void require_both_classes(const std::vector<ScoredSample>& samples, const char* what) {
  bool has_live = false, has_spoof = false;
  for (const auto& s : samples) (s.is_spoof ? has_spoof : has_live) = true;
  if (!has_live || !has_spoof)
    throw std::runtime_error(std::string(what) + ": need both live and spoof samples");
}

/// Candidate thresholds at midpoints between consecutive distinct scores,
/// plus one below and one above everything.
std::vector<double> candidate_thresholds(const std::vector<ScoredSample>& samples) {
  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) scores.push_back(s.score);
  std::sort(scores.begin(), scores.end());
  scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
  std::vector<double> t;
  t.push_back(scores.front() - 1.0);
  for (size_t i = 0; i + 1 < scores.size(); ++i) t.push_back(0.5 * (scores[i] + scores[i + 1]));
  t.push_back(scores.back() + 1.0);
  return t;
}

}  // namespace

AcerResult compute_acer(const std::vector<ScoredSample>& samples, double threshold) {
  require_both_classes(samples, "compute_acer");
  std::int64_t spoof_total = 0, live_total = 0, spoof_as_live = 0, live_as_spoof = 0;
  for (const auto& s : samples) {
    if (s.is_spoof) {
      ++spoof_total;
      if (s.score < threshold) ++spoof_as_live;
    } else {
      ++live_total;
      if (s.score >= threshold) ++live_as_spoof;
    }
  }
  AcerResult r;
  r.apcer = static_cast<double>(spoof_as_live) / static_cast<double>(spoof_total);
  r.bpcer = static_cast<double>(live_as_spoof) / static_cast<double>(live_total);
  r.acer = 0.5 * (r.apcer + r.bpcer);
  return r;
}

EerResult compute_eer(const std::vector<ScoredSample>& samples) {
  require_both_classes(samples, "compute_eer");
  EerResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double t : candidate_thresholds(samples)) {
    const AcerResult a = compute_acer(samples, t);
    const double gap = std::abs(a.apcer - a.bpcer);
    if (gap < best_gap - 1e-15 || (std::abs(gap - best_gap) <= 1e-15 && a.acer < best.eer)) {
      best_gap = gap;
      best.eer = a.acer;
      best.threshold = t;
    }
  }
  return best;
}

double tdr_at_fdr(const std::vector<ScoredSample>& samples, double fdr) {
  require_both_classes(samples, "tdr_at_fdr");
  double best = 0.0;
  std::int64_t spoof_total = 0, live_total = 0;
  for (const auto& s : samples) (s.is_spoof ? spoof_total : live_total)++;
  for (double t : candidate_thresholds(samples)) {
    std::int64_t live_detected = 0, spoof_detected = 0;
    for (const auto& s : samples) {
      if (s.score >= t) (s.is_spoof ? spoof_detected : live_detected)++;
    }
    const double live_rate = static_cast<double>(live_detected) / static_cast<double>(live_total);
    if (live_rate <= fdr)
      best = std::max(best, static_cast<double>(spoof_detected) / static_cast<double>(spoof_total));
  }
  return best;
}

double sweep_alpha0(const std::vector<double>& depth_terms, const std::vector<double>& trace_terms,
                    const std::vector<bool>& is_spoof, const std::vector<double>& candidates) {
  if (depth_terms.size() != trace_terms.size() || depth_terms.size() != is_spoof.size())
    throw std::invalid_argument("sweep_alpha0: size mismatch");
  double best_alpha = candidates.empty() ? 1.0 : candidates.front();
  double best_eer = std::numeric_limits<double>::infinity();
  for (double a : candidates) {
    std::vector<ScoredSample> scored(depth_terms.size());
    for (size_t i = 0; i < depth_terms.size(); ++i) {
      scored[i].score = depth_terms[i] + a * trace_terms[i];
      scored[i].is_spoof = is_spoof[i];
    }
    const double eer = compute_eer(scored).eer;
    if (eer < best_eer) {
      best_eer = eer;
      best_alpha = a;
    }
  }
  return best_alpha;
}

}  // namespace spooftrace
