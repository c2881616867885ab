#include "spooftrace/warp3d.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace spooftrace {

void LandmarkSet::clamp_to(int n) {
  for (auto& p : pts) {
    p[0] = std::min(static_cast<double>(n - 1), std::max(0.0, p[0]));
    p[1] = std::min(static_cast<double>(n - 1), std::max(0.0, p[1]));
  }
}

LandmarkSet load_landmarks(const std::string& path, int image_size) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open landmark file: " + path);
  LandmarkSet lm;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw std::runtime_error("malformed landmark line in " + path);
    lm.pts.push_back({x, y});
  }
  if (lm.count() < 3) throw std::runtime_error("landmark file needs at least 3 points: " + path);
  lm.clamp_to(image_size);
  return lm;
}

void save_landmarks(const LandmarkSet& lm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write landmark file: " + path);
  out.precision(10);
  for (const auto& p : lm.pts) out << p[0] << " " << p[1] << "\n";
}

namespace {

double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
}

struct Circumcircle {
  double cx, cy, r2;
  bool ok;
};

Circumcircle circumcircle(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double d = 2.0 * orient2d(a, b, c);
  if (std::abs(d) < 1e-12) return {0, 0, 0, false};
  const double a2 = a[0] * a[0] + a[1] * a[1];
  const double b2 = b[0] * b[0] + b[1] * b[1];
  const double c2 = c[0] * c[0] + c[1] * c[1];
  const double ux = (a2 * (b[1] - c[1]) + b2 * (c[1] - a[1]) + c2 * (a[1] - b[1])) / d;
  const double uy = (a2 * (c[0] - b[0]) + b2 * (a[0] - c[0]) + c2 * (b[0] - a[0])) / d;
  const double dx = a[0] - ux, dy = a[1] - uy;
  return {ux, uy, dx * dx + dy * dy, true};
}

std::array<int, 3> sorted_tri(int a, int b, int c) {
  std::array<int, 3> t = {a, b, c};
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

bool circumcircle_empty(const std::vector<Vec2>& pts, const std::array<int, 3>& tri, double eps) {
  const auto cc = circumcircle(pts[tri[0]], pts[tri[1]], pts[tri[2]]);
  if (!cc.ok) return false;
  for (int i = 0; i < static_cast<int>(pts.size()); ++i) {
    if (i == tri[0] || i == tri[1] || i == tri[2]) continue;
    const double dx = pts[i][0] - cc.cx, dy = pts[i][1] - cc.cy;
    if (dx * dx + dy * dy < cc.r2 - eps) return false;
  }
  return true;
}

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& pts) {
  const int q = static_cast<int>(pts.size());
  if (q < 3) throw std::invalid_argument("delaunay: need at least 3 points");

  // Bowyer-Watson with three symbolic vertices at infinity. Indices q, q+1,
  // q+2 stand for the directions below; their incircle tests degenerate to
  // half-plane tests, so hull slivers with huge circumcircles are handled
  // exactly.
  static const Vec2 inf_dir[3] = {{-0.8660254037844386, -0.5},
                                  {0.8660254037844386, -0.5},
                                  {0.0, 1.0}};
  const auto dir_of = [&](int idx) { return inf_dir[idx - q]; };

  struct Tri {
    std::array<int, 3> idx;  // oriented
    Circumcircle cc;         // valid only for fully finite triangles
    int supers;
  };
  const auto make_tri = [&](int a, int b, int c) {
    Tri t;
    t.idx = {a, b, c};
    t.supers = (a >= q) + (b >= q) + (c >= q);
    t.cc = t.supers == 0 ? circumcircle(pts[a], pts[b], pts[c]) : Circumcircle{0, 0, 0, false};
    return t;
  };

  const auto in_cavity = [&](const Tri& t, const Vec2& p) {
    if (t.supers == 0) {
      if (!t.cc.ok) return false;
      const double dx = p[0] - t.cc.cx, dy = p[1] - t.cc.cy;
      return dx * dx + dy * dy < t.cc.r2;
    }
    if (t.supers == 3) return true;
    if (t.supers == 1) {
      // limit of the circumcircle as the super vertex recedes: the open
      // half-plane beside the finite edge, on the super vertex's side
      int a = -1, b = -1, s = -1;
      for (int e = 0; e < 3; ++e) {
        if (t.idx[e] >= q) s = t.idx[e];
      }
      for (int e = 0; e < 3; ++e) {
        if (t.idx[e] >= q) {
          a = t.idx[(e + 1) % 3];
          b = t.idx[(e + 2) % 3];
          break;
        }
      }
      const Vec2& pa = pts[a];
      const Vec2& pb = pts[b];
      const Vec2 d = dir_of(s);
      const double side_p = (pb[0] - pa[0]) * (p[1] - pa[1]) - (pb[1] - pa[1]) * (p[0] - pa[0]);
      const double side_s = (pb[0] - pa[0]) * d[1] - (pb[1] - pa[1]) * d[0];
      return side_p * side_s > 0.0;
    }
    // two supers: half-plane through the finite vertex along the bisector
    int a = -1;
    Vec2 w = {0.0, 0.0};
    for (int e = 0; e < 3; ++e) {
      if (t.idx[e] < q) {
        a = t.idx[e];
      } else {
        const Vec2 d = dir_of(t.idx[e]);
        w[0] += d[0];
        w[1] += d[1];
      }
    }
    return (p[0] - pts[a][0]) * w[0] + (p[1] - pts[a][1]) * w[1] > 0.0;
  };

  std::vector<Tri> tris;
  tris.push_back(make_tri(q, q + 1, q + 2));

  for (int i = 0; i < q; ++i) {
    const Vec2& p = pts[i];
    std::vector<Tri> keep;
    std::map<std::pair<int, int>, std::pair<int, int>> edges;  // sorted edge -> (count, from)
    keep.reserve(tris.size() + 4);
    for (const auto& t : tris) {
      if (!in_cavity(t, p)) {
        keep.push_back(t);
        continue;
      }
      for (int e = 0; e < 3; ++e) {
        const int a = t.idx[e], b = t.idx[(e + 1) % 3];
        auto key = std::minmax(a, b);
        auto& slot = edges[{key.first, key.second}];
        slot.first++;
        slot.second = a;  // remember the cavity-side orientation a->b
      }
    }
    for (const auto& [edge, info] : edges) {
      if (info.first != 1) continue;  // interior cavity edge
      const int a = info.second;
      const int b = a == edge.first ? edge.second : edge.first;
      keep.push_back(make_tri(a, b, i));
    }
    tris = std::move(keep);
  }

  std::vector<std::array<int, 3>> out;
  for (const auto& t : tris) {
    if (t.supers > 0) continue;
    if (!t.cc.ok) continue;
    out.push_back(sorted_tri(t.idx[0], t.idx[1], t.idx[2]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::array<int, 3>> delaunay_bruteforce(const std::vector<Vec2>& pts) {
  const int q = static_cast<int>(pts.size());
  if (q < 3) throw std::invalid_argument("delaunay_bruteforce: need at least 3 points");
  if (q > 16) throw std::invalid_argument("delaunay_bruteforce: only valid for Q <= 16");
  std::vector<std::array<int, 3>> out;
  for (int a = 0; a < q; ++a)
    for (int b = a + 1; b < q; ++b)
      for (int c = b + 1; c < q; ++c) {
        if (std::abs(orient2d(pts[a], pts[b], pts[c])) < 1e-12) continue;
        if (circumcircle_empty(pts, {a, b, c}, 0.0)) out.push_back({a, b, c});
      }
  std::sort(out.begin(), out.end());
  return out;
}

TriMesh build_mesh(const LandmarkSet& lm, int n) {
  if (lm.count() < 3) throw std::invalid_argument("build_mesh: need at least 3 landmarks");
  TriMesh mesh;
  mesh.N = n;
  mesh.triangles = delaunay(lm.pts);
  mesh.tri_id.assign(static_cast<size_t>(n) * n, -1);

  for (int ti = 0; ti < static_cast<int>(mesh.triangles.size()); ++ti) {
    const auto& t = mesh.triangles[ti];
    const Vec2 &a = lm.pts[t[0]], &b = lm.pts[t[1]], &c = lm.pts[t[2]];
    const double det = orient2d(a, b, c);
    if (std::abs(det) < 1e-12) {
      std::cerr << "warp3d: skipping degenerate triangle " << ti << "\n";
      continue;
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a[0], b[0], c[0]}))));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({a[0], b[0], c[0]}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a[1], b[1], c[1]}))));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({a[1], b[1], c[1]}))));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        auto& slot = mesh.tri_id[static_cast<size_t>(y) * n + x];
        if (slot != -1) continue;
        const Vec2 p = {static_cast<double>(x), static_cast<double>(y)};
        const double w0 = orient2d(b, c, p) / det;
        const double w1 = orient2d(c, a, p) / det;
        const double w2 = orient2d(a, b, p) / det;
        const double eps = -1e-10;
        if (w0 >= eps && w1 >= eps && w2 >= eps) slot = ti;
      }
  }
  return mesh;
}

Tensor<double> sparse_offset(const LandmarkSet& src, const LandmarkSet& dst) {
  if (src.count() != dst.count())
    throw std::invalid_argument("sparse_offset: landmark count mismatch");
  Tensor<double> out({src.count(), 2});
  for (int i = 0; i < src.count(); ++i) {
    out[i * 2 + 0] = dst.pts[i][0] - src.pts[i][0];
    out[i * 2 + 1] = dst.pts[i][1] - src.pts[i][1];
  }
  return out;
}

Tensor<double> densify_offset(const Tensor<double>& grid, const LandmarkSet& src,
                              const Tensor<double>& sparse, const TriMesh& mesh) {
  if (sparse.rank() != 2 || sparse.dim(0) != src.count() || sparse.dim(1) != 2)
    throw std::invalid_argument("densify_offset: sparse offsets must be Q x 2");
  const Shape4 g = as4(grid);
  if (g.c != 2) throw std::invalid_argument("densify_offset: grid must be [H,W,2]");
  Tensor<double> out(grid.dims());
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      const int yy = std::min(mesh.N - 1, y), xx = std::min(mesh.N - 1, x);
      const int ti = mesh.id_at(yy, xx);
      if (ti < 0) continue;
      const auto& t = mesh.triangles[ti];
      const Vec2 &a = src.pts[t[0]], &b = src.pts[t[1]], &c = src.pts[t[2]];
      const double det = orient2d(a, b, c);
      if (std::abs(det) < 1e-12) continue;
      const Vec2 p = {grid.at(y, x, 0), grid.at(y, x, 1)};
      const double w0 = orient2d(b, c, p) / det;
      const double w1 = orient2d(c, a, p) / det;
      const double w2 = 1.0 - w0 - w1;
      for (int k = 0; k < 2; ++k)
        out.at(y, x, k) = w0 * sparse[t[0] * 2 + k] + w1 * sparse[t[1] * 2 + k] +
                          w2 * sparse[t[2] * 2 + k];
    }
  return out;
}

}  // namespace spooftrace
