#include <benchmark/benchmark.h>

#include <random>

#include "spooftrace/nets.hpp"
#include "spooftrace/train.hpp"
#include "spooftrace/warp3d.hpp"

using namespace spooftrace;

namespace {

Tensor<float> random_tensor(std::mt19937& rng, std::vector<int> dims, float lo = 0.f,
                            float hi = 1.f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor<float> t(std::move(dims));
  for (std::int64_t i = 0; i < t.size(); ++i) t[i] = u(rng);
  return t;
}

Dataset bench_dataset(int count) {
  ToyConfig cfg;
  cfg.N = 64;
  cfg.count = count;
  cfg.seed = 33;
  const auto toys = gen_dataset(cfg);
  Dataset ds;
  ds.meta.image_size = cfg.N;
  for (size_t i = 0; i < toys.size(); ++i) {
    DatasetSample s;
    s.id = std::to_string(i);
    s.is_spoof = toys[i].is_spoof;
    s.medium = toys[i].medium;
    s.live_index = toys[i].live_index;
    s.image = toys[i].image;
    s.p0 = toys[i].p0;
    s.depth_gt = toys[i].depth_gt;
    s.landmarks = toys[i].landmarks;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void BM_BandDecompose(benchmark::State& state) {
  std::mt19937 rng(1);
  const Tensor<float> img = random_tensor(rng, {64, 64, 3});
  const BandConfig cfg = BandConfig::desk();
  for (auto _ : state) {
    auto d = decompose(img, cfg);
    benchmark::DoNotOptimize(d.high.data());
  }
}
BENCHMARK(BM_BandDecompose);

void BM_Conv2dForward(benchmark::State& state) {
  std::mt19937 rng(2);
  auto x = Var<float>::constant(random_tensor(rng, {8, 32, 32, 64}));
  auto w = Var<float>::leaf(normal_init<float>({3, 3, 64, 64}, rng), false);
  for (auto _ : state) {
    Var<float> y = conv2d(x, w, Var<float>(), 1, 1);
    benchmark::DoNotOptimize(y.val().data());
  }
}
BENCHMARK(BM_Conv2dForward);

void BM_Conv2dBackward(benchmark::State& state) {
  std::mt19937 rng(3);
  auto x = Var<float>::leaf(random_tensor(rng, {8, 32, 32, 64}), true);
  auto w = Var<float>::leaf(normal_init<float>({3, 3, 64, 64}, rng), true);
  for (auto _ : state) {
    x.zero_grad();
    w.zero_grad();
    Var<float> loss = mean_square(conv2d(x, w, Var<float>(), 1, 1));
    backward(loss);
    benchmark::DoNotOptimize(w.grad().data());
  }
}
BENCHMARK(BM_Conv2dBackward);

void BM_GeneratorForward(benchmark::State& state) {
  std::mt19937 rng(4);
  GeneratorConfig cfg;
  cfg.band = BandConfig::desk();
  Generator<float> gen(cfg, rng);
  const Tensor<float> batch = random_tensor(rng, {8, 64, 64, 3});
  for (auto _ : state) {
    auto out = gen.forward(batch, false);
    benchmark::DoNotOptimize(out.depth.val().data());
  }
}
BENCHMARK(BM_GeneratorForward);

void BM_DelaunayMesh(benchmark::State& state) {
  const ToySample live = gen_live(5, 0, 64, 140);
  for (auto _ : state) {
    TriMesh mesh = build_mesh(live.landmarks, 64);
    benchmark::DoNotOptimize(mesh.tri_id.data());
  }
}
BENCHMARK(BM_DelaunayMesh);

void BM_DenseWarp(benchmark::State& state) {
  const ToySample a = gen_live(6, 0, 64, 140);
  const ToySample b = gen_live(6, 1, 64, 140);
  const TriMesh mesh = build_mesh(a.landmarks, 64);
  const Tensor<double> grid = pixel_grid<double>(64);
  const Tensor<double> dense =
      densify_offset(grid, a.landmarks, sparse_offset(a.landmarks, b.landmarks), mesh);
  Tensor<float> off({64, 64, 2});
  for (std::int64_t i = 0; i < dense.size(); ++i) off[i] = static_cast<float>(dense[i]);
  for (auto _ : state) {
    Tensor<float> out = warp(a.image, off);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DenseWarp);

void BM_TrainIteration(benchmark::State& state) {
  Dataset ds = bench_dataset(32);
  TrainConfig cfg = TrainConfig::desk();
  cfg.seed = 9;
  Trainer<float> trainer(cfg);
  for (auto _ : state) {
    TrainBatch<float> batch = trainer.sample_batch(ds, ds.live_indices(), ds.spoof_indices());
    const LossRecord rec = trainer.train_iteration(batch);
    benchmark::DoNotOptimize(rec.depth);
  }
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond);

void BM_ComputeEer(benchmark::State& state) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredSample> scores;
  for (int i = 0; i < 10000; ++i)
    scores.push_back({"x", u(rng) + (i % 2 ? 0.2 : 0.0), i % 2 == 1, ""});
  for (auto _ : state) {
    auto r = compute_eer(scores);
    benchmark::DoNotOptimize(r.eer);
  }
}
BENCHMARK(BM_ComputeEer)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
