#pragma once

#include <array>

#include "spooftrace/autodiff.hpp"
#include "spooftrace/trace_algebra.hpp"

namespace spooftrace {

/// Weights of the multitask objective and the scoring weight alpha0.
struct LossWeights {
  double alpha1 = 100.0;  // depth map loss
  double alpha2 = 5.0;    // adversarial loss for G
  double alpha3 = 1.0;    // inpainting mask loss
  double alpha4 = 1e-4;   // trace regularizer
  double alpha5 = 10.0;   // synthesized spoof pixel loss
  double alpha6 = 1.0;    // depth loss on hard samples
  double beta = 0.1;      // additive-trace threshold in the mask loss
  double alpha0 = 1.0;    // trace weight in the spoofness score

  void validate() const {
    for (double v : {alpha1, alpha2, alpha3, alpha4, alpha5, alpha6, beta, alpha0})
      if (v < 0.0) throw std::invalid_argument("LossWeights: weights must be nonnegative");
  }
};

enum class DepthLossMode { mean_abs, mean_square };

/// Depth supervision: per-element mean against the pseudo-depth target.
template <typename S>
Var<S> depth_loss(const Var<S>& m, const Var<S>& m0,
                  DepthLossMode mode = DepthLossMode::mean_abs) {
  check_same_dims(m.val(), m0.val(), "depth_loss");
  const Var<S> diff = m - m0;
  return mode == DepthLossMode::mean_abs ? mean_abs(diff) : mean_square(diff);
}

/// Least-squares adversarial loss for the generator: each decision map is
/// pushed toward 1 (real).
template <typename S>
Var<S> adv_g_loss(const std::array<Var<S>, 4>& d_outputs) {
  Var<S> total;
  for (const auto& d : d_outputs) {
    Var<S> term = mean_square(add_const(d, S(-1)));
    total = total.defined() ? total + term : term;
  }
  return total;
}

/// Least-squares adversarial loss for the discriminators: real maps toward 1,
/// synthesized maps toward 0. The synthesized inputs must be detached by the
/// caller.
template <typename S>
Var<S> adv_d_loss(const std::array<Var<S>, 4>& real_outputs,
                  const std::array<Var<S>, 4>& fake_outputs) {
  Var<S> total;
  for (const auto& d : real_outputs) {
    Var<S> term = mean_square(add_const(d, S(-1)));
    total = total.defined() ? total + term : term;
  }
  for (const auto& d : fake_outputs) total = total + mean_square(d);
  return total;
}

/// Indicator 1[channel-mean |t_a| > beta], taken as a constant.
template <typename S>
Tensor<S> trace_indicator(const Tensor<S>& t_a, S beta) {
  const Shape4 s = as4(t_a);
  std::vector<int> od = t_a.dims();
  od[od.size() - 1] = 1;
  Tensor<S> ind(od);
  const std::int64_t pixels = t_a.size() / s.c;
  for (std::int64_t i = 0; i < pixels; ++i) {
    S acc = 0;
    for (int c = 0; c < s.c; ++c) acc += std::abs(t_a[i * s.c + c]);
    ind[i] = (acc / static_cast<S>(s.c)) > beta ? S(1) : S(0);
  }
  return ind;
}

/// Inpainting mask loss: a positive term pulling P toward the region of
/// strong additive traces and a normalized negative term suppressing P where
/// the preliminary mask p0 forbids inpainting. No gradient flows through the
/// indicator.
template <typename S>
Var<S> inpaint_mask_loss(const Var<S>& p, const Var<S>& t_a, const Tensor<S>& p0,
                         std::type_identity_t<S> beta) {
  check_same_dims(p.val(), p0, "inpaint_mask_loss: P vs P0");
  const Var<S> ind = Var<S>::constant(trace_indicator(t_a.val(), static_cast<S>(beta)));
  Var<S> loss = mean_square(p - ind);
  S p0_norm = 0;
  for (std::int64_t i = 0; i < p0.size(); ++i) p0_norm += p0[i] * p0[i];
  if (p0_norm > S(0)) {
    Var<S> masked = hadamard(p, Var<S>::constant(p0));
    loss = loss + sum_all(square(masked)) * (S(1) / p0_norm);
  }
  return loss;
}

/// Intensity regularizer on the additive traces and the inpainting region.
template <typename S>
Var<S> trace_reg_loss(const BasicTraceSet<Var<S>>& tr, std::type_identity_t<S> lambda = S(1)) {
  return mean_square(tr.B) + mean_square(tr.C) + mean_square(tr.T) +
         static_cast<S>(lambda) * mean_square(tr.P);
}

/// Supervised pixel loss on synthesized samples: mean absolute difference
/// between the re-estimated live composite and the target composite. The
/// target side is detached here, so its gradient is exactly zero.
template <typename S>
Var<S> synth_pixel_loss(const Var<S>& estimated, const Var<S>& target) {
  check_same_dims(estimated.val(), target.val(), "synth_pixel_loss");
  return mean_abs(estimated - detach(target));
}

/// Step-1 objective: a1*L_depth + a2*L_G + a3*L_P + a4*L_R.
template <typename S>
Var<S> step1_total(const Var<S>& l_depth, const Var<S>& l_g, const Var<S>& l_p,
                   const Var<S>& l_r, const LossWeights& w) {
  return static_cast<S>(w.alpha1) * l_depth + static_cast<S>(w.alpha2) * l_g +
         static_cast<S>(w.alpha3) * l_p + static_cast<S>(w.alpha4) * l_r;
}

/// Step-3 objective: a5*L_S + a6*L_H.
template <typename S>
Var<S> step3_total(const Var<S>& l_s, const Var<S>& l_h, const LossWeights& w) {
  return static_cast<S>(w.alpha5) * l_s + static_cast<S>(w.alpha6) * l_h;
}

}  // namespace spooftrace
