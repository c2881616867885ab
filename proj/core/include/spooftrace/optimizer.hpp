#pragma once

#include <cmath>

#include "spooftrace/nn.hpp"

namespace spooftrace {

enum class OptimizerKind { adam, sgd };

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw std::invalid_argument("unknown optimizer: " + s);
}

inline std::string to_string(OptimizerKind k) {
  return k == OptimizerKind::adam ? "adam" : "sgd";
}

/// First-order optimizer over one ParamSet. Applies the accumulated
/// gradients and zeroes them. Moment buffers are exposed by name so
/// checkpoints can restore training exactly.
template <typename S>
class Optimizer {
 public:
  explicit Optimizer(OptimizerKind kind = OptimizerKind::adam, double beta1 = 0.9,
                     double beta2 = 0.999, double eps = 1e-8)
      : kind_(kind), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(ParamSet<S>& ps, double lr) {
    if (kind_ == OptimizerKind::adam && m_.empty()) {
      m_.reserve(ps.params.size());
      v_.reserve(ps.params.size());
      for (auto& [_, p] : ps.params) {
        m_.push_back(Tensor<S>::zeros(p.val().dims()));
        v_.push_back(Tensor<S>::zeros(p.val().dims()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < ps.params.size(); ++i) {
      Var<S>& p = ps.params[i].second;
      if (!p.has_grad()) continue;
      Tensor<S>& g = p.grad();
      Tensor<S>& w = p.mutable_val();
      if (kind_ == OptimizerKind::sgd) {
        for (std::int64_t j = 0; j < w.size(); ++j)
          w[j] -= static_cast<S>(lr) * g[j];
      } else {
        Tensor<S>& m = m_[i];
        Tensor<S>& v = v_[i];
        for (std::int64_t j = 0; j < w.size(); ++j) {
          m[j] = static_cast<S>(beta1_) * m[j] + static_cast<S>(1.0 - beta1_) * g[j];
          v[j] = static_cast<S>(beta2_) * v[j] + static_cast<S>(1.0 - beta2_) * g[j] * g[j];
          const double mhat = m[j] / bc1;
          const double vhat = v[j] / bc2;
          w[j] -= static_cast<S>(lr * mhat / (std::sqrt(vhat) + eps_));
        }
      }
    }
    ps.zero_grad();
  }

  OptimizerKind kind() const { return kind_; }
  std::int64_t step_count() const { return t_; }
  void set_step_count(std::int64_t t) { t_ = t; }

  /// Moment tensors in parameter order, for checkpointing.
  std::vector<std::pair<std::string, Tensor<S>*>> state_tensors(const ParamSet<S>& ps,
                                                                const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor<S>*>> out;
    if (kind_ != OptimizerKind::adam) return out;
    if (m_.empty()) {
      m_.reserve(ps.params.size());
      v_.reserve(ps.params.size());
      for (const auto& [_, p] : ps.params) {
        m_.push_back(Tensor<S>::zeros(p.val().dims()));
        v_.push_back(Tensor<S>::zeros(p.val().dims()));
      }
    }
    for (size_t i = 0; i < ps.params.size(); ++i) {
      out.emplace_back(prefix + ps.params[i].first + ".m", &m_[i]);
      out.emplace_back(prefix + ps.params[i].first + ".v", &v_[i]);
    }
    return out;
  }

 private:
  OptimizerKind kind_;
  double beta1_, beta2_, eps_;
  std::int64_t t_ = 0;
  std::vector<Tensor<S>> m_, v_;
};

}  // namespace spooftrace
