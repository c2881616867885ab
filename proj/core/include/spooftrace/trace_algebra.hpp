#pragma once

#include <random>

#include "spooftrace/image_ops.hpp"
#include "spooftrace/tensor.hpp"

namespace spooftrace {

/// Frequency-band layout of the trace model. n1/n2 are the sizes the low and
/// mid bands are expressed at; both must divide N so the band filters are
/// exact projections.
struct BandConfig {
  int N = 256;
  int n1 = 32;
  int n2 = 128;
  double lambda_reg = 1.0;

  static BandConfig desk() { return {64, 8, 32, 1.0}; }
  static BandConfig paper() { return {256, 32, 128, 1.0}; }

  void validate() const {
    if (!(0 < n1 && n1 < n2 && n2 < N))
      throw std::invalid_argument("BandConfig: need 0 < n1 < n2 < N");
    if (N % n1 != 0 || N % n2 != 0)
      throw std::invalid_argument("BandConfig: n1 and n2 must divide N");
  }
};

/// The five disentangled components of one image: additive traces at three
/// frequency bands plus the inpainting region and its content.
template <class V>
struct BasicTraceSet {
  V B;    // low-frequency additive trace, HxWx3
  V C;    // mid-frequency additive trace, HxWx3
  V T;    // high-frequency additive trace, HxWx3
  V P;    // inpainting region, HxWx1 in [0,1]
  V I_P;  // inpainting content, HxWx3 in [0,1]
};

template <typename S>
using TraceSet = BasicTraceSet<Tensor<S>>;

/// Input-side band split fed to the encoder; mid/high are stored before
/// amplification.
template <typename S>
struct BandDecomposition {
  Tensor<S> low;   //  |I|_{n1}
  Tensor<S> mid;   //  |I|_{n2} - |I|_{n1}
  Tensor<S> high;  //  I - |I|_{n2}
  S amp_mid = S(15);
  S amp_high = S(25);
};

template <typename S>
inline Tensor<S> one_minus(const Tensor<S>& t) {
  return map(t, [](S x) { return S(1) - x; });
}

/// Low bandpass: resample down to n x n and back up. Identity for n == N.
template <typename S>
Tensor<S> bandpass_low(const Tensor<S>& img, int n) {
  const Shape4 s = as4(img);
  if (n <= 0 || n > s.h || n > s.w)
    throw std::invalid_argument("bandpass_low: band size out of range");
  if (n == s.h && n == s.w) return img;
  return resize_bilinear(resize_bilinear(img, n, n), s.h, s.w);
}

// Shared trace formulas; instantiated with plain tensors here and with
// autodiff variables by the training graph.

/// (1-P)*a + P*b, with P broadcasting over channels.
template <class V>
V masked_blend(const V& P, const V& a, const V& b) {
  return hadamard(one_minus(P), a) + hadamard(P, b);
}

/// T_A = |B|_{n1} + |C|_{n2} + T
template <class V>
V additive_trace(const BasicTraceSet<V>& tr, const BandConfig& cfg) {
  return bandpass_low(tr.B, cfg.n1) + bandpass_low(tr.C, cfg.n2) + tr.T;
}

/// Spoof generation: (1-P)*(live + T_A) + P*content.
template <class V>
V apply_sgf(const V& live, const BasicTraceSet<V>& tr, const V& inpaint_content,
            const BandConfig& cfg) {
  return masked_blend(tr.P, live + additive_trace(tr, cfg), inpaint_content);
}

/// Live reconstruction G(.): (1-P)*(img - T_A) + P*I_P.
template <class V>
V reconstruct_live(const V& img, const BasicTraceSet<V>& tr, const BandConfig& cfg) {
  return masked_blend(tr.P, img - additive_trace(tr, cfg), tr.I_P);
}

/// Spoof synthesis G^-(.): traces and source content must already be warped
/// into the target geometry.
template <class V>
V synthesize_spoof(const V& target_live, const BasicTraceSet<V>& warped_tr,
                   const V& warped_src, const BandConfig& cfg) {
  return masked_blend(warped_tr.P, target_live + additive_trace(warped_tr, cfg), warped_src);
}

template <class V>
struct HierarchicalRecon {
  V hi, mid, low;
};

/// Live reconstruction at three resolutions; each band contributes only to
/// reconstructions that can represent it.
template <class V>
HierarchicalRecon<V> hierarchical_reconstruct(const V& img, const BasicTraceSet<V>& tr,
                                              const BandConfig& cfg) {
  const V b_low = bandpass_low(tr.B, cfg.n1);
  const V c_mid = bandpass_low(tr.C, cfg.n2);
  HierarchicalRecon<V> r;
  r.hi = masked_blend(tr.P, img - (b_low + c_mid + tr.T), tr.I_P);
  r.mid = masked_blend(tr.P, bandpass_low(img, cfg.n2) - (b_low + c_mid), tr.I_P);
  r.low = masked_blend(tr.P, bandpass_low(img, cfg.n1) - b_low, tr.I_P);
  return r;
}

/// Band split of the encoder input (stored unamplified).
template <typename S>
BandDecomposition<S> decompose(const Tensor<S>& img, const BandConfig& cfg) {
  const Shape4 s = as4(img);
  if (s.h != cfg.N || s.w != cfg.N)
    throw std::invalid_argument("decompose: image size does not match config");
  BandDecomposition<S> d;
  d.low = bandpass_low(img, cfg.n1);
  Tensor<S> mid_band = bandpass_low(img, cfg.n2);
  d.mid = mid_band - d.low;
  d.high = img - mid_band;
  return d;
}

/// 9-channel encoder input: [low, amp_mid*mid, amp_high*high].
template <typename S>
Tensor<S> encoder_input(const BandDecomposition<S>& dec) {
  Tensor<S> mid = dec.mid * dec.amp_mid;
  Tensor<S> high = dec.high * dec.amp_high;
  return concat_channels<S>({&dec.low, &mid, &high});
}

/// Deterministic core of the hard-sample perturbation.
template <typename S>
TraceSet<S> perturb_traces_with(const TraceSet<S>& tr, S wb, S wc, S wt, bool drop_inpainting) {
  TraceSet<S> out = tr;
  out.B = tr.B * wb;
  out.C = tr.C * wc;
  out.T = tr.T * wt;
  if (drop_inpainting) out.P = Tensor<S>::zeros(tr.P.dims());
  return out;
}

/// Hard-sample perturbation: scale each additive component by an independent
/// uniform weight in [0,1] and drop the inpainting with probability 0.5.
/// Always consumes exactly four draws from the generator.
template <typename S>
TraceSet<S> perturb_traces(const TraceSet<S>& tr, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const S wb = static_cast<S>(u(rng));
  const S wc = static_cast<S>(u(rng));
  const S wt = static_cast<S>(u(rng));
  const bool drop = u(rng) < 0.5;
  return perturb_traces_with(tr, wb, wc, wt, drop);
}

}  // namespace spooftrace
