#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "spooftrace/toydata.hpp"

using namespace spooftrace;

namespace {

ToyConfig small_config(int count = 40) {
  ToyConfig cfg;
  cfg.N = 64;
  cfg.Q = 140;
  cfg.seed = 9;
  cfg.count = count;
  return cfg;
}

Tensor<double> to_double(const Tensor<float>& t) { return t.cast<double>(); }

TraceSet<double> to_double(const TraceSet<float>& t) {
  return {to_double(t.B), to_double(t.C), to_double(t.T), to_double(t.P), to_double(t.I_P)};
}

}  // namespace

TEST_CASE("live generation is a pure function of (seed, index)") {
  const ToySample a = gen_live(5, 3, 64, 140);
  const ToySample b = gen_live(5, 3, 64, 140);
  CHECK(max_abs_diff(a.image, b.image) == 0.f);
  CHECK(max_abs_diff(a.depth_gt, b.depth_gt) == 0.f);
  REQUIRE(a.landmarks.count() == b.landmarks.count());
  for (int i = 0; i < a.landmarks.count(); ++i) {
    CHECK(a.landmarks.pts[i][0] == b.landmarks.pts[i][0]);
    CHECK(a.landmarks.pts[i][1] == b.landmarks.pts[i][1]);
  }
  const ToySample c = gen_live(6, 3, 64, 140);
  CHECK(max_abs_diff(a.image, c.image) > 0.f);
}

TEST_CASE("live samples have bounded landmarks, depth and pixels") {
  for (int idx : {0, 1, 7}) {
    const ToySample s = gen_live(11, idx, 64, 140);
    CHECK(s.landmarks.count() == 140);
    for (const auto& p : s.landmarks.pts) {
      CHECK(p[0] >= 0.0);
      CHECK(p[0] <= 63.0);
      CHECK(p[1] >= 0.0);
      CHECK(p[1] <= 63.0);
    }
    CHECK(s.depth_gt.dims() == std::vector<int>{8, 8, 1});
    for (std::int64_t i = 0; i < s.depth_gt.size(); ++i) {
      CHECK(s.depth_gt[i] >= 0.f);
      CHECK(s.depth_gt[i] <= 1.f);
    }
    for (std::int64_t i = 0; i < s.image.size(); ++i) {
      CHECK(s.image[i] >= 0.f);
      CHECK(s.image[i] <= 1.f);
    }
    // the depth bump peaks somewhere in the face
    float maxd = 0.f;
    for (std::int64_t i = 0; i < s.depth_gt.size(); ++i) maxd = std::max(maxd, s.depth_gt[i]);
    CHECK(maxd > 0.8f);
  }
}

TEST_CASE("spoof media carry the documented trace structure") {
  const ToySample live = gen_live(13, 0, 64, 140);

  SUBCASE("print spoofs are pure low-band") {
    const ToySample s = gen_spoof(live, Medium::print_like, 13, 100);
    CHECK(max_abs_diff(s.gt_traces.C, Tensor<float>({64, 64, 3})) == 0.f);
    CHECK(max_abs_diff(s.gt_traces.T, Tensor<float>({64, 64, 3})) == 0.f);
    CHECK(max_abs_diff(s.gt_traces.P, Tensor<float>({64, 64, 1})) == 0.f);
    CHECK(max_abs_diff(s.gt_traces.B, Tensor<float>({64, 64, 3})) > 0.f);
    CHECK(max_abs_diff(s.depth_gt, Tensor<float>({8, 8, 1})) == 0.f);  // spoof depth is zero
  }

  SUBCASE("replay spoofs add a high-frequency grid") {
    const ToySample s = gen_spoof(live, Medium::replay_like, 13, 101);
    CHECK(max_abs_diff(s.gt_traces.T, Tensor<float>({64, 64, 3})) > 0.f);
    CHECK(max_abs_diff(s.gt_traces.P, Tensor<float>({64, 64, 1})) == 0.f);
  }

  SUBCASE("mask spoofs live in the mid and high bands") {
    const ToySample s = gen_spoof(live, Medium::mask_like, 13, 102);
    CHECK(max_abs_diff(s.gt_traces.C, Tensor<float>({64, 64, 3})) > 0.f);
    CHECK(max_abs_diff(s.gt_traces.B, Tensor<float>({64, 64, 3})) == 0.f);
    CHECK(max_abs_diff(s.gt_traces.P, Tensor<float>({64, 64, 1})) == 0.f);
  }

  SUBCASE("partial spoofs are a binary patch with bounded area") {
    for (int idx : {103, 104, 105, 106, 107, 108}) {
      const ToySample s = gen_spoof(live, Medium::partial_like, 13, idx);
      CHECK(max_abs_diff(s.gt_traces.B, Tensor<float>({64, 64, 3})) == 0.f);
      CHECK(max_abs_diff(s.gt_traces.C, Tensor<float>({64, 64, 3})) == 0.f);
      CHECK(max_abs_diff(s.gt_traces.T, Tensor<float>({64, 64, 3})) == 0.f);
      double area = 0.0;
      for (std::int64_t i = 0; i < s.gt_traces.P.size(); ++i) {
        CHECK((s.gt_traces.P[i] == 0.f || s.gt_traces.P[i] == 1.f));
        area += s.gt_traces.P[i];
      }
      area /= 64.0 * 64.0;
      CHECK(area >= 0.02);
      CHECK(area <= 0.15);
    }
  }

  SUBCASE("unknown medium is rejected") {
    CHECK_THROWS_AS(gen_spoof(live, Medium::none, 13, 109), std::invalid_argument);
  }
}

TEST_CASE("every generated spoof satisfies the generation-function round trip") {
  ToyConfig cfg = small_config(200);
  const std::vector<ToySample> ds = gen_dataset(cfg);
  const BandConfig band = cfg.band();
  int checked = 0;
  for (const auto& s : ds) {
    if (!s.is_spoof) continue;
    const ToySample& live = ds[s.live_index];
    const Tensor<double> rebuilt =
        apply_sgf(to_double(live.image), to_double(s.gt_traces), to_double(s.spoof_content), band);
    CHECK(max_abs_diff(rebuilt, to_double(s.image)) <= 1e-6);
    const Tensor<double> recon =
        reconstruct_live(to_double(s.image), to_double(s.gt_traces), band);
    CHECK(max_abs_diff(recon, to_double(live.image)) <= 1e-6);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("preliminary masks follow the per-medium semantics") {
  const int n = 64;

  SUBCASE("print and replay forbid inpainting everywhere") {
    for (Medium m : {Medium::print_like, Medium::replay_like}) {
      const Tensor<float> p0 = preliminary_mask(m, n);
      for (std::int64_t i = 0; i < p0.size(); ++i) CHECK(p0[i] == 1.f);
    }
  }

  SUBCASE("mask attacks may inpaint the face interior") {
    const Tensor<float> p0 = preliminary_mask(Medium::mask_like, n);
    CHECK(p0.at(0, 0, 0) == 1.f);          // corner stays protected
    CHECK(p0.at(n / 2, n / 2, 0) == 0.f);  // face centre may be inpainted
  }

  SUBCASE("eye-partial masks free only the upper half") {
    const Tensor<float> p0 = preliminary_mask(Medium::partial_like, n, PartialRegion::eye);
    bool has_zero = false;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (p0.at(y, x, 0) == 0.f) {
          has_zero = true;
          CHECK(y < n / 2);
        }
    CHECK(has_zero);
  }

  SUBCASE("mouth-partial masks free only the lower half") {
    const Tensor<float> p0 = preliminary_mask(Medium::partial_like, n, PartialRegion::mouth);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (p0.at(y, x, 0) == 0.f) CHECK(y >= n / 2);
  }

  SUBCASE("masks are binary") {
    for (Medium m : {Medium::print_like, Medium::mask_like, Medium::partial_like}) {
      const Tensor<float> p0 = preliminary_mask(m, n);
      for (std::int64_t i = 0; i < p0.size(); ++i) CHECK((p0[i] == 0.f || p0[i] == 1.f));
    }
  }
}

TEST_CASE("datasets are balanced and reproducible") {
  ToyConfig cfg = small_config(80);
  const std::vector<ToySample> a = gen_dataset(cfg);
  REQUIRE(static_cast<int>(a.size()) == 80);

  int live = 0;
  std::map<std::string, int> per_medium;
  for (const auto& s : a) {
    if (!s.is_spoof)
      ++live;
    else
      per_medium[to_string(s.medium)]++;
  }
  CHECK(live == 40);
  for (const auto& [m, count] : per_medium) {
    INFO("medium ", m);
    CHECK(count == 10);
  }

  const std::vector<ToySample> b = gen_dataset(cfg);
  CHECK(max_abs_diff(a[17].image, b[17].image) == 0.f);
  CHECK(max_abs_diff(a[63].image, b[63].image) == 0.f);

  // (seed, index) purity: regenerating one live sample matches the dataset
  const ToySample solo = gen_live(cfg.seed, 17, cfg.N, cfg.Q);
  CHECK(max_abs_diff(solo.image, a[17].image) == 0.f);

  CHECK_THROWS_AS(gen_dataset(ToyConfig{64, 140, 1, 0}), std::invalid_argument);
}

TEST_CASE("protocol splits partition the dataset as documented") {
  ToyConfig cfg = small_config(120);
  const std::vector<ToySample> ds = gen_dataset(cfg);

  SUBCASE("known split is stratified 60/40") {
    const ProtocolSplit sp = make_splits(ds, ProtocolMode::known, Medium::none, 3);
    CHECK(sp.train_ids.size() + sp.test_ids.size() == ds.size());
    std::map<std::string, std::pair<int, int>> counts;  // group -> (train, test)
    for (int id : sp.train_ids)
      counts[ds[id].is_spoof ? to_string(ds[id].medium) : "live"].first++;
    for (int id : sp.test_ids)
      counts[ds[id].is_spoof ? to_string(ds[id].medium) : "live"].second++;
    for (const auto& [group, c] : counts) {
      INFO("group ", group);
      const int total = c.first + c.second;
      CHECK(std::abs(c.first - 0.6 * total) <= 1.0);
    }
    // disjointness
    std::set<int> train(sp.train_ids.begin(), sp.train_ids.end());
    for (int id : sp.test_ids) CHECK(train.count(id) == 0);
  }

  SUBCASE("unknown split holds one medium out entirely") {
    const ProtocolSplit sp = make_splits(ds, ProtocolMode::unknown, Medium::mask_like, 3);
    for (int id : sp.train_ids) CHECK(!(ds[id].is_spoof && ds[id].medium == Medium::mask_like));
    int held = 0, live_test = 0, live_total = 0;
    for (const auto& s : ds) live_total += s.is_spoof ? 0 : 1;
    for (int id : sp.test_ids) {
      if (ds[id].is_spoof) {
        CHECK(ds[id].medium == Medium::mask_like);
        ++held;
      } else {
        ++live_test;
      }
    }
    CHECK(held == 15);  // all mask spoofs from 60 spoof samples
    CHECK(live_test == live_total / 5);  // 20% of the live faces
  }

  SUBCASE("open-set testing mixes known test samples with all held-out samples") {
    const ProtocolSplit known = make_splits(ds, ProtocolMode::known, Medium::none, 3);
    const ProtocolSplit sp = make_splits(ds, ProtocolMode::open_set, Medium::partial_like, 3);
    for (int id : sp.train_ids)
      CHECK(!(ds[id].is_spoof && ds[id].medium == Medium::partial_like));
    // every held-out sample is tested
    for (size_t i = 0; i < ds.size(); ++i)
      if (ds[i].is_spoof && ds[i].medium == Medium::partial_like)
        CHECK(std::find(sp.test_ids.begin(), sp.test_ids.end(), static_cast<int>(i)) !=
              sp.test_ids.end());
    // and the known-protocol test ids are still tested
    for (int id : known.test_ids)
      CHECK(std::find(sp.test_ids.begin(), sp.test_ids.end(), id) != sp.test_ids.end());
    bool has_known_medium_spoof = false;
    for (int id : sp.test_ids)
      has_known_medium_spoof |= ds[id].is_spoof && ds[id].medium != Medium::partial_like;
    CHECK(has_known_medium_spoof);
  }

  SUBCASE("a missing held-out medium is rejected") {
    std::vector<ToySample> live_only(ds.begin(), ds.begin() + 10);
    CHECK_THROWS_AS(make_splits(live_only, ProtocolMode::unknown, Medium::mask_like, 3),
                    std::invalid_argument);
  }
}
