#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spooftrace/tensor.hpp"
#include "spooftrace/trace_algebra.hpp"

namespace spooftrace {

using Vec2 = std::array<double, 2>;

/// 2D face shape vertices in pixel units.
struct LandmarkSet {
  std::vector<Vec2> pts;

  int count() const { return static_cast<int>(pts.size()); }

  /// Clamps all coordinates into [0, n-1]; applied when landmarks enter the
  /// system (file load, procedural generation).
  void clamp_to(int n);
};

LandmarkSet load_landmarks(const std::string& path, int image_size);
void save_landmarks(const LandmarkSet& lm, const std::string& path);

/// Triangulation of a landmark set plus a per-pixel triangle id map
/// (-1 outside the convex hull). Immutable once built.
struct TriMesh {
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::int32_t> tri_id;  // row-major N*N
  int N = 0;

  int id_at(int y, int x) const { return tri_id[static_cast<size_t>(y) * N + x]; }
};

/// Delaunay triangulation by incremental (Bowyer-Watson) insertion.
std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts);

/// Exhaustive triangulation over all vertex triples; only valid for small
/// point sets (Q <= 16). Serves as the oracle for the incremental version.
std::vector<std::array<int, 3>> delaunay_bruteforce(const std::vector<Vec2>& pts);

/// True if no point lies strictly inside the triangle's circumcircle.
bool circumcircle_empty(const std::vector<Vec2>& pts, const std::array<int, 3>& tri,
                        double eps = 1e-9);

/// Triangulates `lm` and rasterizes the triangle id map at n x n.
TriMesh build_mesh(const LandmarkSet& lm, int n);

/// grid[y][x] = (x, y), shape n x n x 2.
template <typename S>
Tensor<S> pixel_grid(int n) {
  if (n < 1) throw std::invalid_argument("pixel_grid: size must be >= 1");
  Tensor<S> g({n, n, 2});
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      g.at(y, x, 0) = static_cast<S>(x);
      g.at(y, x, 1) = static_cast<S>(y);
    }
  return g;
}

/// Per-vertex offsets dst - src, shape Q x 2.
Tensor<double> sparse_offset(const LandmarkSet& src, const LandmarkSet& dst);

/// Barycentric interpolation of sparse vertex offsets over the mesh; zero
/// outside the convex hull. `grid` supplies the evaluation positions.
Tensor<double> densify_offset(const Tensor<double>& grid, const LandmarkSet& src,
                              const Tensor<double>& sparse, const TriMesh& mesh);

namespace detail {

template <typename S>
struct BilinearTap {
  int x0, x1, y0, y1;
  S fx, fy;
  bool clamped_x, clamped_y;
};

template <typename S>
inline BilinearTap<S> bilinear_tap(S sx, S sy, int w, int h) {
  BilinearTap<S> t;
  S fx0 = std::floor(sx), fy0 = std::floor(sy);
  t.x0 = static_cast<int>(fx0);
  t.y0 = static_cast<int>(fy0);
  t.fx = sx - fx0;
  t.fy = sy - fy0;
  t.clamped_x = t.x0 < 0 || t.x0 >= w - 1;
  t.clamped_y = t.y0 < 0 || t.y0 >= h - 1;
  if (t.x0 < 0) { t.x0 = 0; t.fx = S(0); }
  if (t.x0 >= w - 1) { t.x0 = w - 1; t.fx = S(0); }
  if (t.y0 < 0) { t.y0 = 0; t.fy = S(0); }
  if (t.y0 >= h - 1) { t.y0 = h - 1; t.fy = S(0); }
  t.x1 = std::min(t.x0 + 1, w - 1);
  t.y1 = std::min(t.y0 + 1, h - 1);
  return t;
}

}  // namespace detail

/// Backward warp with bilinear sampling and border clamping: the output at
/// (x,y) reads the input at (x,y) + offset(x,y). Works on [H,W,C] tensors.
template <typename S>
Tensor<S> warp(const Tensor<S>& img, const Tensor<S>& offset) {
  const Shape4 s = as4(img);
  const Shape4 so = as4(offset);
  if (so.h != s.h || so.w != s.w || so.c != 2 || so.b != s.b)
    throw std::invalid_argument("warp: offset must be [H,W,2] matching the image");
  if (!all_finite(offset)) throw std::invalid_argument("warp: offsets must be finite");
  Tensor<S> out(img.dims());
  for (int b = 0; b < s.b; ++b) {
    const S* ip = img.data() + static_cast<std::int64_t>(b) * s.plane();
    const S* op0 = offset.data() + static_cast<std::int64_t>(b) * so.plane();
    S* op = out.data() + static_cast<std::int64_t>(b) * s.plane();
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        const std::int64_t pi = static_cast<std::int64_t>(y) * s.w + x;
        const S sx = static_cast<S>(x) + op0[pi * 2 + 0];
        const S sy = static_cast<S>(y) + op0[pi * 2 + 1];
        const auto t = detail::bilinear_tap<S>(sx, sy, s.w, s.h);
        const S* r0 = ip + (static_cast<std::int64_t>(t.y0) * s.w) * s.c;
        const S* r1 = ip + (static_cast<std::int64_t>(t.y1) * s.w) * s.c;
        for (int c = 0; c < s.c; ++c) {
          const S v0 = (S(1) - t.fx) * r0[t.x0 * s.c + c] + t.fx * r0[t.x1 * s.c + c];
          const S v1 = (S(1) - t.fx) * r1[t.x0 * s.c + c] + t.fx * r1[t.x1 * s.c + c];
          op[pi * s.c + c] = (S(1) - t.fy) * v0 + t.fy * v1;
        }
      }
  }
  return out;
}

/// Gradients of `warp` with respect to the image (scatter of the four tap
/// weights) and the offset field (spatial derivative of the interpolant).
template <typename S>
void warp_backward(const Tensor<S>& img, const Tensor<S>& offset, const Tensor<S>& grad_out,
                   Tensor<S>* grad_img, Tensor<S>* grad_offset) {
  const Shape4 s = as4(img);
  for (int b = 0; b < s.b; ++b) {
    const std::int64_t ib = static_cast<std::int64_t>(b) * s.plane();
    const std::int64_t ob = static_cast<std::int64_t>(b) * s.h * s.w * 2;
    const S* ip = img.data() + ib;
    const S* gp = grad_out.data() + ib;
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x) {
        const std::int64_t pi = static_cast<std::int64_t>(y) * s.w + x;
        const S sx = static_cast<S>(x) + offset[ob + pi * 2 + 0];
        const S sy = static_cast<S>(y) + offset[ob + pi * 2 + 1];
        const auto t = detail::bilinear_tap<S>(sx, sy, s.w, s.h);
        const std::int64_t i00 = (static_cast<std::int64_t>(t.y0) * s.w + t.x0) * s.c;
        const std::int64_t i01 = (static_cast<std::int64_t>(t.y0) * s.w + t.x1) * s.c;
        const std::int64_t i10 = (static_cast<std::int64_t>(t.y1) * s.w + t.x0) * s.c;
        const std::int64_t i11 = (static_cast<std::int64_t>(t.y1) * s.w + t.x1) * s.c;
        S gx = 0, gy = 0;
        for (int c = 0; c < s.c; ++c) {
          const S g = gp[pi * s.c + c];
          if (grad_img) {
            S* gi = grad_img->data() + ib;
            gi[i00 + c] += (S(1) - t.fx) * (S(1) - t.fy) * g;
            gi[i01 + c] += t.fx * (S(1) - t.fy) * g;
            gi[i10 + c] += (S(1) - t.fx) * t.fy * g;
            gi[i11 + c] += t.fx * t.fy * g;
          }
          const S v00 = ip[i00 + c], v01 = ip[i01 + c];
          const S v10 = ip[i10 + c], v11 = ip[i11 + c];
          gx += g * ((S(1) - t.fy) * (v01 - v00) + t.fy * (v11 - v10));
          gy += g * ((S(1) - t.fx) * (v10 - v00) + t.fx * (v11 - v01));
        }
        if (grad_offset) {
          S* go = grad_offset->data() + ob;
          if (!t.clamped_x) go[pi * 2 + 0] += gx;
          if (!t.clamped_y) go[pi * 2 + 1] += gy;
        }
      }
  }
}

/// Warps every trace component and the source image with one offset field.
template <typename S>
std::pair<TraceSet<S>, Tensor<S>> warp_traceset(const TraceSet<S>& tr, const Tensor<S>& src_img,
                                                const Tensor<S>& offset) {
  TraceSet<S> out;
  out.B = warp(tr.B, offset);
  out.C = warp(tr.C, offset);
  out.T = warp(tr.T, offset);
  out.P = warp(tr.P, offset);
  out.I_P = warp(tr.I_P, offset);
  return {std::move(out), warp(src_img, offset)};
}

}  // namespace spooftrace
