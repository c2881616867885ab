#pragma once

#include <cmath>

#include "spooftrace/tensor.hpp"

namespace spooftrace {

namespace detail {

/// One bilinear tap: source index pair and weights along one axis for output
/// index `i` under origin-aligned scaling `pos = i * src/dst`, border-clamped.
struct AxisTap {
  int i0, i1;
  double w0, w1;
};

inline AxisTap axis_tap(int i, int src, int dst) {
  const double pos = static_cast<double>(i) * static_cast<double>(src) / static_cast<double>(dst);
  double f = std::floor(pos);
  int i0 = static_cast<int>(f);
  double t = pos - f;
  if (i0 >= src - 1) {  // clamp to the last sample
    i0 = src - 1;
    t = 0.0;
  }
  if (i0 < 0) {
    i0 = 0;
    t = 0.0;
  }
  const int i1 = std::min(i0 + 1, src - 1);
  return {i0, i1, 1.0 - t, t};
}

}  // namespace detail

/// Bilinear resample to ho x wo. Sampling is origin-aligned: output pixel
/// (y,x) reads the source at (y*hi/ho, x*wi/wo). Integer scale factors land
/// on exact source pixels, so down-then-up at sizes that divide evenly is a
/// projection (applying it twice changes nothing).
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& src, int ho, int wo) {
  if (ho <= 0 || wo <= 0) throw std::invalid_argument("resize_bilinear: output size must be positive");
  const Shape4 s = as4(src);
  std::vector<int> od = src.dims();
  od[od.size() == 4 ? 1 : 0] = ho;
  od[od.size() == 4 ? 2 : 1] = wo;
  Tensor<T> out(od);

  std::vector<detail::AxisTap> ty(ho), tx(wo);
  for (int y = 0; y < ho; ++y) ty[y] = detail::axis_tap(y, s.h, ho);
  for (int x = 0; x < wo; ++x) tx[x] = detail::axis_tap(x, s.w, wo);

  const std::int64_t src_plane = s.plane();
  const std::int64_t out_plane = static_cast<std::int64_t>(ho) * wo * s.c;
  for (int b = 0; b < s.b; ++b) {
    const T* sp = src.data() + b * src_plane;
    T* op = out.data() + b * out_plane;
    for (int y = 0; y < ho; ++y) {
      const auto& ay = ty[y];
      for (int x = 0; x < wo; ++x) {
        const auto& ax = tx[x];
        const T* r0 = sp + (static_cast<std::int64_t>(ay.i0) * s.w) * s.c;
        const T* r1 = sp + (static_cast<std::int64_t>(ay.i1) * s.w) * s.c;
        T* o = op + (static_cast<std::int64_t>(y) * wo + x) * s.c;
        for (int c = 0; c < s.c; ++c) {
          const double v0 = ax.w0 * r0[ax.i0 * s.c + c] + ax.w1 * r0[ax.i1 * s.c + c];
          const double v1 = ax.w0 * r1[ax.i0 * s.c + c] + ax.w1 * r1[ax.i1 * s.c + c];
          o[c] = static_cast<T>(ay.w0 * v0 + ay.w1 * v1);
        }
      }
    }
  }
  return out;
}

/// Adjoint of resize_bilinear: scatters output-space gradients back to a
/// source-shaped tensor.
template <typename T>
Tensor<T> resize_bilinear_adjoint(const Tensor<T>& grad_out, int hi, int wi) {
  const Shape4 g = as4(grad_out);
  std::vector<int> sd = grad_out.dims();
  sd[sd.size() == 4 ? 1 : 0] = hi;
  sd[sd.size() == 4 ? 2 : 1] = wi;
  Tensor<T> out(sd);

  std::vector<detail::AxisTap> ty(g.h), tx(g.w);
  for (int y = 0; y < g.h; ++y) ty[y] = detail::axis_tap(y, hi, g.h);
  for (int x = 0; x < g.w; ++x) tx[x] = detail::axis_tap(x, wi, g.w);

  const std::int64_t src_plane = static_cast<std::int64_t>(hi) * wi * g.c;
  for (int b = 0; b < g.b; ++b) {
    T* sp = out.data() + b * src_plane;
    const T* gp = grad_out.data() + b * g.plane();
    for (int y = 0; y < g.h; ++y) {
      const auto& ay = ty[y];
      for (int x = 0; x < g.w; ++x) {
        const auto& ax = tx[x];
        const T* gv = gp + (static_cast<std::int64_t>(y) * g.w + x) * g.c;
        T* r0 = sp + (static_cast<std::int64_t>(ay.i0) * wi) * g.c;
        T* r1 = sp + (static_cast<std::int64_t>(ay.i1) * wi) * g.c;
        for (int c = 0; c < g.c; ++c) {
          const T v = gv[c];
          r0[ax.i0 * g.c + c] += static_cast<T>(ay.w0 * ax.w0) * v;
          r0[ax.i1 * g.c + c] += static_cast<T>(ay.w0 * ax.w1) * v;
          r1[ax.i0 * g.c + c] += static_cast<T>(ay.w1 * ax.w0) * v;
          r1[ax.i1 * g.c + c] += static_cast<T>(ay.w1 * ax.w1) * v;
        }
      }
    }
  }
  return out;
}

/// Concatenate along the channel axis.
template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_channels: no inputs");
  Shape4 s0 = as4(*parts[0]);
  int ctot = 0;
  for (const auto* p : parts) {
    Shape4 s = as4(*p);
    if (s.b != s0.b || s.h != s0.h || s.w != s0.w)
      throw std::invalid_argument("concat_channels: spatial shape mismatch");
    ctot += s.c;
  }
  std::vector<int> od = parts[0]->dims();
  if (od.size() < 3) od = {s0.h, s0.w, ctot};
  else od[od.size() - 1] = ctot;
  Tensor<T> out(od);
  const std::int64_t pixels = static_cast<std::int64_t>(s0.b) * s0.h * s0.w;
  int coff = 0;
  for (const auto* p : parts) {
    const int pc = as4(*p).c;
    for (std::int64_t i = 0; i < pixels; ++i)
      for (int c = 0; c < pc; ++c) out[i * ctot + coff + c] = (*p)[i * pc + c];
    coff += pc;
  }
  return out;
}

}  // namespace spooftrace
