#include "spooftrace/toydata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>

namespace spooftrace {

Medium medium_from_string(const std::string& s) {
  if (s == "live" || s == "none") return Medium::none;
  if (s == "print") return Medium::print_like;
  if (s == "replay") return Medium::replay_like;
  if (s == "mask") return Medium::mask_like;
  if (s == "partial") return Medium::partial_like;
  throw std::invalid_argument("unknown medium: " + s);
}

std::string to_string(Medium m) {
  switch (m) {
    case Medium::none: return "live";
    case Medium::print_like: return "print";
    case Medium::replay_like: return "replay";
    case Medium::mask_like: return "mask";
    case Medium::partial_like: return "partial";
  }
  return "live";
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937 sample_rng(std::uint64_t seed, int index, std::uint64_t salt) {
  const std::uint64_t mixed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index) + salt));
  return std::mt19937(static_cast<std::uint32_t>(mixed ^ (mixed >> 32)));
}

float uniform(std::mt19937& rng, float lo, float hi) {
  return lo + (hi - lo) * static_cast<float>(std::uniform_real_distribution<double>(0, 1)(rng));
}

/// Procedural face geometry; every landmark is an analytic function of these
/// parameters, so warping tests have exact correspondences.
struct FaceGeometry {
  float cx, cy, a, b;        // face ellipse
  float skin[3];
  float bg0[3], bg1[3];
  float lx, ly;              // light direction

  float eye_dx() const { return 0.42f * a; }
  float eye_y() const { return cy - 0.28f * b; }
  float eye_rx() const { return 0.17f * a; }
  float eye_ry() const { return 0.10f * b; }
  float brow_y() const { return cy - 0.47f * b; }
  float mouth_y() const { return cy + 0.45f * b; }
  float mouth_rx() const { return 0.32f * a; }
  float mouth_ry() const { return 0.10f * b; }
};

FaceGeometry draw_geometry(std::mt19937& rng, int n) {
  FaceGeometry g;
  const float fn = static_cast<float>(n);
  g.cx = fn * uniform(rng, 0.46f, 0.54f);
  g.cy = fn * uniform(rng, 0.48f, 0.56f);
  g.a = fn * uniform(rng, 0.27f, 0.33f);
  g.b = fn * uniform(rng, 0.35f, 0.41f);
  const float base[3] = {0.76f, 0.62f, 0.52f};
  for (int c = 0; c < 3; ++c) g.skin[c] = base[c] + uniform(rng, -0.07f, 0.07f);
  for (int c = 0; c < 3; ++c) g.bg0[c] = uniform(rng, 0.18f, 0.42f);
  for (int c = 0; c < 3; ++c) g.bg1[c] = uniform(rng, 0.18f, 0.42f);
  g.lx = uniform(rng, -0.4f, 0.4f);
  g.ly = uniform(rng, -0.3f, 0.1f);
  return g;
}

float soft_inside(float r, float edge) { return 1.0f / (1.0f + std::exp((r - 1.0f) / edge)); }

float ellipse_r(float x, float y, float cx, float cy, float rx, float ry) {
  const float u = (x - cx) / rx, v = (y - cy) / ry;
  return std::sqrt(u * u + v * v);
}

Tensor<float> render_face(const FaceGeometry& g, int n) {
  Tensor<float> img({n, n, 3});
  const float edge = 1.2f / g.a;
  const float lip[3] = {0.55f, 0.28f, 0.24f};
  const float eye_col[3] = {0.16f, 0.13f, 0.12f};
  const float brow_col[3] = {0.25f, 0.18f, 0.13f};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const float fx = static_cast<float>(x), fy = static_cast<float>(y);
      const float u = (fx - g.cx) / g.a, v = (fy - g.cy) / g.b;
      const float r = std::sqrt(u * u + v * v);
      const float alpha = soft_inside(r, edge);
      const float z = std::sqrt(std::max(0.0f, 1.0f - u * u - v * v));
      const float shade = 0.62f + 0.38f * (0.7f * z + 0.3f * (-u * g.lx - v * g.ly));
      const float t = (fx + fy) / (2.0f * n);
      float col[3];
      for (int c = 0; c < 3; ++c) {
        const float bg = g.bg0[c] + (g.bg1[c] - g.bg0[c]) * t;
        col[c] = alpha * g.skin[c] * shade + (1.0f - alpha) * bg;
      }
      // eyes
      for (int side = -1; side <= 1; side += 2) {
        const float er = ellipse_r(fx, fy, g.cx + side * g.eye_dx(), g.eye_y(), g.eye_rx(),
                                   g.eye_ry());
        const float ea = soft_inside(er, 0.35f);
        for (int c = 0; c < 3; ++c) col[c] = (1.0f - ea) * col[c] + ea * eye_col[c];
        // eyebrow stroke above the eye
        const float br = ellipse_r(fx, fy, g.cx + side * g.eye_dx(), g.brow_y(),
                                   1.25f * g.eye_rx(), 0.45f * g.eye_ry());
        const float ba = 0.8f * soft_inside(br, 0.4f);
        for (int c = 0; c < 3; ++c) col[c] = (1.0f - ba) * col[c] + ba * brow_col[c];
      }
      // mouth
      const float mr = ellipse_r(fx, fy, g.cx, g.mouth_y(), g.mouth_rx(), g.mouth_ry());
      const float ma = soft_inside(mr, 0.3f);
      for (int c = 0; c < 3; ++c) col[c] = (1.0f - ma) * col[c] + ma * lip[c] * (0.8f + 0.2f * z);
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::min(1.0f, std::max(0.0f, col[c]));
    }
  return img;
}

/// 140 analytic feature points: 64 on the face contour, 16 per eye, 8 per
/// brow, 24 on the mouth, 4 on the nose line.
LandmarkSet face_landmarks(const FaceGeometry& g, int n, int q) {
  LandmarkSet lm;
  lm.pts.reserve(static_cast<size_t>(q));
  auto ellipse_pts = [&lm](float cx, float cy, float rx, float ry, int count, float scale) {
    for (int i = 0; i < count; ++i) {
      const double th = 2.0 * M_PI * i / count;
      lm.pts.push_back({cx + scale * rx * std::cos(th), cy + scale * ry * std::sin(th)});
    }
  };
  const int contour = q - 76;  // 64 for the default Q=140
  ellipse_pts(g.cx, g.cy, g.a, g.b, contour, 1.0f);
  for (int side = -1; side <= 1; side += 2) {
    ellipse_pts(g.cx + side * g.eye_dx(), g.eye_y(), g.eye_rx(), g.eye_ry(), 16, 1.0f);
    for (int i = 0; i < 8; ++i) {
      const float t = -1.0f + 2.0f * i / 7.0f;
      lm.pts.push_back({g.cx + side * g.eye_dx() + t * 1.25f * g.eye_rx(),
                        g.brow_y() - 0.2f * g.eye_ry() * (1.0f - t * t)});
    }
  }
  ellipse_pts(g.cx, g.mouth_y(), g.mouth_rx(), g.mouth_ry(), 24, 1.0f);
  // nose ridge, slightly zigzagged to keep the vertex set in general position
  for (int i = 0; i < 4; ++i)
    lm.pts.push_back({g.cx + (i % 2 ? 0.05f : -0.05f) * g.a,
                      g.cy - 0.15f * g.b + 0.12f * g.b * i});
  lm.clamp_to(n);
  return lm;
}

Tensor<float> render_depth(const FaceGeometry& g, int n, int k) {
  Tensor<float> d({k, k, 1});
  const float s = static_cast<float>(n) / static_cast<float>(k);
  for (int y = 0; y < k; ++y)
    for (int x = 0; x < k; ++x) {
      const float fx = (static_cast<float>(x) + 0.5f) * s;
      const float fy = (static_cast<float>(y) + 0.5f) * s;
      const float u = (fx - g.cx) / g.a, v = (fy - g.cy) / g.b;
      d.at(y, x, 0) = std::sqrt(std::max(0.0f, 1.0f - u * u - v * v));
    }
  return d;
}

TraceSet<float> zero_traces(int n) {
  TraceSet<float> tr;
  tr.B = Tensor<float>({n, n, 3});
  tr.C = Tensor<float>({n, n, 3});
  tr.T = Tensor<float>({n, n, 3});
  tr.P = Tensor<float>({n, n, 1});
  tr.I_P = Tensor<float>({n, n, 3});
  return tr;
}

float signed_amp(std::mt19937& rng, float lo, float hi) {
  const float a = uniform(rng, lo, hi);
  return uniform(rng, 0.0f, 1.0f) < 0.5f ? -a : a;
}

void fill_print_traces(TraceSet<float>& tr, std::mt19937& rng, int n) {
  float tint[3], grad[3];
  for (int c = 0; c < 3; ++c) tint[c] = signed_amp(rng, 0.10f, 0.18f);
  for (int c = 0; c < 3; ++c) grad[c] = signed_amp(rng, 0.04f, 0.08f);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const float t = static_cast<float>(x + y) / (2.0f * n);
      for (int c = 0; c < 3; ++c) tr.B.at(y, x, c) = tint[c] + grad[c] * (2.0f * t - 1.0f);
    }
}

void fill_replay_traces(TraceSet<float>& tr, std::mt19937& rng, int n) {
  // screen color cast, biased toward blue
  float tint[3] = {signed_amp(rng, 0.04f, 0.08f), signed_amp(rng, 0.04f, 0.08f),
                   uniform(rng, 0.08f, 0.15f)};
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      for (int c = 0; c < 3; ++c) tr.B.at(y, x, c) = tint[c];
  // moire-style high-frequency grid, above the n2 band
  const float amp = uniform(rng, 0.12f, 0.20f);
  const float fx = uniform(rng, 18.0f, 26.0f), fy = uniform(rng, 18.0f, 26.0f);
  const float p1 = uniform(rng, 0.0f, 6.28f), p2 = uniform(rng, 0.0f, 6.28f);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const float v = amp * std::sin(2.0f * static_cast<float>(M_PI) * fx * x / n + p1) *
                      std::sin(2.0f * static_cast<float>(M_PI) * fy * y / n + p2);
      for (int c = 0; c < 3; ++c) tr.T.at(y, x, c) = v * (c == 2 ? 1.0f : 0.8f);
    }
}

void fill_mask_traces(TraceSet<float>& tr, std::mt19937& rng, int n, const FaceGeometry& g) {
  // mid-frequency blob pattern inside the face region
  const int blobs = 3 + static_cast<int>(uniform(rng, 0.0f, 2.99f));
  std::vector<std::array<float, 4>> blob(blobs);  // cx, cy, sigma, amp
  for (auto& bl : blob) {
    bl[0] = g.cx + uniform(rng, -0.6f, 0.6f) * g.a;
    bl[1] = g.cy + uniform(rng, -0.6f, 0.6f) * g.b;
    bl[2] = uniform(rng, n / 16.0f, n / 10.0f);
    bl[3] = signed_amp(rng, 0.13f, 0.20f);
  }
  const float edge_amp = signed_amp(rng, 0.12f, 0.18f);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      float cval = 0.0f;
      for (const auto& bl : blob) {
        const float dx = x - bl[0], dy = y - bl[1];
        cval += bl[3] * std::exp(-(dx * dx + dy * dy) / (2.0f * bl[2] * bl[2]));
      }
      const float u = (x - g.cx) / g.a, v = (y - g.cy) / g.b;
      const float r = std::sqrt(u * u + v * v);
      // thin stroke along the mask rim
      const float rim = edge_amp * std::exp(-(r - 1.0f) * (r - 1.0f) * g.a * g.a / 3.0f);
      for (int c = 0; c < 3; ++c) {
        tr.C.at(y, x, c) = cval * (c == 0 ? 1.0f : 0.85f);
        tr.T.at(y, x, c) = rim;
      }
    }
}

void fill_partial_traces(TraceSet<float>& tr, Tensor<float>& content, std::mt19937& rng, int n,
                         const FaceGeometry& g, PartialRegion region,
                         const Tensor<float>& live_img) {
  const float pcx = g.cx;
  const float pcy = region == PartialRegion::eye ? g.eye_y() : g.mouth_y();
  const float prx = region == PartialRegion::eye ? 0.80f * g.a : 0.58f * g.a;
  const float pry = region == PartialRegion::eye ? 0.21f * g.b : 0.18f * g.b;
  static const float palette[4][3] = {{0.92f, 0.84f, 0.15f},
                                      {0.18f, 0.45f, 0.88f},
                                      {0.86f, 0.18f, 0.22f},
                                      {0.12f, 0.72f, 0.45f}};
  const int pal = static_cast<int>(uniform(rng, 0.0f, 3.99f));
  const float theta = uniform(rng, 0.0f, 3.14f);
  const float freq = uniform(rng, 6.0f, 10.0f);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const float r = ellipse_r(static_cast<float>(x), static_cast<float>(y), pcx, pcy, prx, pry);
      const float inside = r <= 1.0f ? 1.0f : 0.0f;
      tr.P.at(y, x, 0) = inside;
      const float s = (x * std::cos(theta) + y * std::sin(theta)) / n;
      const float stripe = std::sin(2.0f * static_cast<float>(M_PI) * freq * s) > 0.0f ? 0.14f : -0.14f;
      for (int c = 0; c < 3; ++c) {
        content.at(y, x, c) =
            std::min(1.0f, std::max(0.0f, palette[pal][c] + stripe * (c == 1 ? 1.0f : 0.7f)));
        tr.I_P.at(y, x, c) = live_img.at(y, x, c);
      }
    }
}

}  // namespace

Tensor<float> preliminary_mask(Medium medium, int n, PartialRegion region) {
  Tensor<float> p0 = Tensor<float>::ones({n, n, 1});
  switch (medium) {
    case Medium::print_like:
    case Medium::replay_like:
      return p0;  // nothing may be inpainted
    case Medium::mask_like: {
      // inpainting allowed inside a canonical face region
      const float cx = 0.5f * n, cy = 0.52f * n, rx = 0.38f * n, ry = 0.46f * n;
      for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x)
          if (ellipse_r(static_cast<float>(x), static_cast<float>(y), cx, cy, rx, ry) <= 1.0f)
            p0.at(y, x, 0) = 0.0f;
      return p0;
    }
    case Medium::partial_like: {
      const int y0 = region == PartialRegion::eye ? static_cast<int>(0.20f * n)
                                                  : static_cast<int>(0.55f * n);
      const int y1 = region == PartialRegion::eye ? static_cast<int>(0.50f * n)
                                                  : static_cast<int>(0.88f * n);
      for (int y = y0; y < y1; ++y)
        for (int x = 0; x < n; ++x) p0.at(y, x, 0) = 0.0f;
      return p0;
    }
    case Medium::none:
      return p0;
  }
  throw std::invalid_argument("preliminary_mask: unknown medium");
}

ToySample gen_live(std::uint64_t seed, int index, int n, int q) {
  if (q < 80) throw std::invalid_argument("gen_live: Q must be at least 80");
  std::mt19937 rng = sample_rng(seed, index, 0x11ULL);
  const FaceGeometry g = draw_geometry(rng, n);
  ToySample s;
  s.image = render_face(g, n);
  s.is_spoof = false;
  s.medium = Medium::none;
  s.landmarks = face_landmarks(g, n, q);
  s.depth_gt = render_depth(g, n, n / 8);
  s.gt_traces = zero_traces(n);
  s.spoof_content = Tensor<float>({n, n, 3});
  s.p0 = Tensor<float>::ones({n, n, 1});
  s.live_index = index;
  return s;
}

ToySample gen_spoof(const ToySample& live, Medium medium, std::uint64_t seed, int index) {
  const int n = as4(live.image).h;
  if (live.live_index < 0) throw std::invalid_argument("gen_spoof: live sample lacks its index");
  std::mt19937 rng = sample_rng(seed, index, 0x22ULL);
  // regenerate the paired live geometry for region placement
  std::mt19937 live_rng = sample_rng(seed, live.live_index, 0x11ULL);
  FaceGeometry g = draw_geometry(live_rng, n);

  ToySample s;
  s.is_spoof = true;
  s.medium = medium;
  s.landmarks = live.landmarks;
  s.depth_gt = Tensor<float>({n / 8, n / 8, 1});  // spoof depth target is zero
  s.gt_traces = zero_traces(n);
  s.spoof_content = Tensor<float>({n, n, 3});
  s.live_index = live.live_index;

  switch (medium) {
    case Medium::print_like:
      fill_print_traces(s.gt_traces, rng, n);
      break;
    case Medium::replay_like:
      fill_replay_traces(s.gt_traces, rng, n);
      break;
    case Medium::mask_like:
      fill_mask_traces(s.gt_traces, rng, n, g);
      break;
    case Medium::partial_like:
      s.partial_region = uniform(rng, 0.0f, 1.0f) < 0.5f ? PartialRegion::eye : PartialRegion::mouth;
      fill_partial_traces(s.gt_traces, s.spoof_content, rng, n, g, s.partial_region, live.image);
      break;
    default:
      throw std::invalid_argument("gen_spoof: unknown medium");
  }
  s.p0 = preliminary_mask(medium, n, s.partial_region);

  BandConfig band;
  band.N = n;
  band.n1 = n / 8;
  band.n2 = n / 2;
  s.image = apply_sgf(live.image, s.gt_traces, s.spoof_content, band);
  return s;
}

std::vector<ToySample> gen_dataset(const ToyConfig& cfg) {
  if (cfg.count <= 0) throw std::invalid_argument("gen_dataset: count must be positive");
  const int live_count = (cfg.count + 1) / 2;
  const int spoof_count = cfg.count - live_count;
  std::vector<ToySample> out;
  out.reserve(static_cast<size_t>(cfg.count));
  static const Medium media[4] = {Medium::print_like, Medium::replay_like, Medium::mask_like,
                                  Medium::partial_like};
  for (int i = 0; i < live_count; ++i) out.push_back(gen_live(cfg.seed, i, cfg.N, cfg.Q));
  for (int j = 0; j < spoof_count; ++j)
    out.push_back(gen_spoof(out[j], media[j % 4], cfg.seed, live_count + j));
  return out;
}

ProtocolSplit make_splits(const std::vector<ToySample>& samples, ProtocolMode mode,
                          Medium held_out_medium, std::uint64_t seed) {
  std::mt19937 rng(static_cast<std::uint32_t>(splitmix64(seed ^ 0x5157ULL)));
  const int n = static_cast<int>(samples.size());

  if (mode != ProtocolMode::known) {
    bool present = false;
    for (const auto& s : samples) present |= s.is_spoof && s.medium == held_out_medium;
    if (!present)
      throw std::invalid_argument("make_splits: held-out medium absent from dataset");
  }

  // stratified shuffle per (label, medium) group
  std::map<std::string, std::vector<int>> groups;
  for (int i = 0; i < n; ++i)
    groups[samples[i].is_spoof ? to_string(samples[i].medium) : "live"].push_back(i);
  for (auto& [_, ids] : groups) std::shuffle(ids.begin(), ids.end(), rng);

  ProtocolSplit split;
  if (mode == ProtocolMode::unknown) {
    split.held_out_medium = to_string(held_out_medium);
    for (const auto& [key, ids] : groups) {
      if (key == "live") {
        const size_t cut = ids.size() * 8 / 10;
        for (size_t i = 0; i < ids.size(); ++i)
          (i < cut ? split.train_ids : split.test_ids).push_back(ids[i]);
      } else if (key == split.held_out_medium) {
        for (int id : ids) split.test_ids.push_back(id);
      } else {
        for (int id : ids) split.train_ids.push_back(id);
      }
    }
  } else {
    for (const auto& [key, ids] : groups) {
      const size_t cut = (ids.size() * 6 + 5) / 10;
      for (size_t i = 0; i < ids.size(); ++i)
        (i < cut ? split.train_ids : split.test_ids).push_back(ids[i]);
    }
    if (mode == ProtocolMode::open_set) {
      split.held_out_medium = to_string(held_out_medium);
      std::vector<int> train;
      for (int id : split.train_ids) {
        if (samples[id].is_spoof && to_string(samples[id].medium) == split.held_out_medium)
          split.test_ids.push_back(id);  // all held-out samples are tested
        else
          train.push_back(id);
      }
      split.train_ids = std::move(train);
    }
  }
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

}  // namespace spooftrace
