#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "spooftrace/checkpoint.hpp"
#include "spooftrace/dataset.hpp"
#include "spooftrace/losses.hpp"
#include "spooftrace/nets.hpp"
#include "spooftrace/optimizer.hpp"

namespace spooftrace {

enum class Ablation { full, step1, step12, single_trace };

Ablation ablation_from_string(const std::string& s);
std::string to_string(Ablation a);

struct TrainConfig {
  double lr = 5e-5;
  std::int64_t max_iterations = 150000;
  int batch_size = 8;
  std::int64_t lr_decay_every = 45000;
  double lr_decay_factor = 0.1;
  double d_lr_factor = 0.5;
  LossWeights weights;
  BandConfig band;
  double amp_mid = 15.0;
  double amp_high = 25.0;
  OptimizerKind optimizer = OptimizerKind::adam;
  DepthLossMode depth_mode = DepthLossMode::mean_abs;
  Ablation ablation = Ablation::full;
  std::int64_t checkpoint_every = 500;
  std::uint64_t seed = 1;

  /// Desk-scale preset. Besides the toy image size and short budget, the
  /// learning rate compensates the 75x iteration cut, and the mask loss /
  /// regularizer weights compensate the per-element loss normalization (the
  /// published values calibrate unnormalized Frobenius sums, which at the
  /// published resolution correspond to far larger effective weights on the
  /// normalized losses; without both adjustments the trace head stays
  /// unanchored within the desk budget).
  static TrainConfig desk() {
    TrainConfig c;
    c.band = BandConfig::desk();
    c.max_iterations = 2000;
    c.lr = 5e-4;
    c.weights.alpha3 = 50.0;
    c.weights.alpha4 = 1.0;
    return c;
  }

  void validate() const {
    if (lr <= 0 || max_iterations <= 0 || lr_decay_every <= 0 || lr_decay_factor <= 0 ||
        d_lr_factor <= 0)
      throw std::invalid_argument("TrainConfig: rates and schedules must be positive");
    if (batch_size < 2 || batch_size % 2 != 0)
      throw std::invalid_argument("TrainConfig: batch_size must be even and >= 2");
    weights.validate();
    band.validate();
  }

  double lr_at(std::int64_t iteration) const {
    return lr * std::pow(lr_decay_factor, static_cast<double>(iteration / lr_decay_every));
  }

  GeneratorConfig generator_config() const {
    GeneratorConfig g;
    g.band = band;
    g.amp_mid = amp_mid;
    g.amp_high = amp_high;
    g.single_trace = ablation == Ablation::single_trace;
    return g;
  }

  bool run_step2() const { return ablation != Ablation::step1; }
  bool run_step3() const { return ablation == Ablation::full; }
};

std::string train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const std::string& json_text);

// small JSON field readers over checkpoint metadata (run_config.cpp)
std::string json_field_object(const std::string& text, const std::string& key);
std::int64_t json_field_int(const std::string& text, const std::string& key);
std::string json_field_string(const std::string& text, const std::string& key);

/// The seven per-iteration loss components, in log order.
struct LossRecord {
  std::int64_t iteration = 0;
  double depth = 0, adv_g = 0, inpaint = 0, reg = 0, adv_d = 0, synth = 0, hard_depth = 0;

  bool finite() const {
    for (double v : {depth, adv_g, inpaint, reg, adv_d, synth, hard_depth})
      if (!std::isfinite(v)) return false;
    return true;
  }
  std::string describe() const {
    std::ostringstream ss;
    ss << "depth=" << depth << " adv_g=" << adv_g << " inpaint=" << inpaint << " reg=" << reg
       << " adv_d=" << adv_d << " synth=" << synth << " hard_depth=" << hard_depth;
    return ss.str();
  }
  static const char* csv_header() {
    return "iteration,depth,adv_g,inpaint,reg,adv_d,synth,hard_depth";
  }
  std::string csv_row() const {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e,%.8e",
                  static_cast<long long>(iteration), depth, adv_g, inpaint, reg, adv_d, synth,
                  hard_depth);
    return buf;
  }
};

/// One balanced minibatch: live samples first, spoof samples second.
template <typename S>
struct TrainBatch {
  Tensor<S> live_images;   // [L,N,N,3]
  Tensor<S> live_depth;    // [L,K,K,1]
  Tensor<S> spoof_images;  // [M,N,N,3]
  Tensor<S> spoof_p0;      // [M,N,N,1]
  std::vector<LandmarkSet> live_landmarks;
  std::vector<LandmarkSet> spoof_landmarks;
  std::vector<const TriMesh*> spoof_meshes;  // optional, parallel to spoof samples
};

template <typename S>
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg)
      : cfg_(validated(cfg)),
        init_rng_(derive_seed(cfg.seed, 1)),
        rng_(derive_seed(cfg.seed, 2)),
        gen_(cfg.generator_config(), init_rng_),
        disc_(cfg.band.N, init_rng_),
        g_opt_(cfg.optimizer),
        d_opt_(cfg.optimizer) {}

  const TrainConfig& config() const { return cfg_; }
  Generator<S>& generator() { return gen_; }
  DiscriminatorBank<S>& discriminators() { return disc_; }
  std::int64_t iteration() const { return iter_; }
  std::mt19937& rng() { return rng_; }

  /// Executes the three training steps on one balanced batch and applies the
  /// parameter updates (generator twice, discriminators once at halved rate).
  LossRecord train_iteration(const TrainBatch<S>& batch) {
    const int n_live = as4(batch.live_images).b;
    const int n_spoof = as4(batch.spoof_images).b;
    if (n_live < 1 || n_spoof < 1)
      throw std::invalid_argument("train_iteration: batch must contain both classes");
    const BandConfig& band = cfg_.band;
    const int k = cfg_.band.N / 8;
    const double lr = cfg_.lr_at(iter_);
    LossRecord rec;
    rec.iteration = iter_;

    // ---- step 1: disentangle live and spoof, depth / mask / regularizer losses
    Tensor<S> images = stack_batch<S>({&batch.live_images, &batch.spoof_images});
    GeneratorOutput<S> out = gen_.forward(images, true);

    const Tensor<S> spoof_depth_zero({n_spoof, k, k, 1});
    Tensor<S> depth_target = stack_batch<S>({&batch.live_depth, &spoof_depth_zero});
    Var<S> l_depth = depth_loss(out.depth, Var<S>::constant(std::move(depth_target)),
                                cfg_.depth_mode);

    BasicTraceSet<Var<S>> spoof_tr = slice_traces(out.traces, n_live, n_live + n_spoof);
    Var<S> l_p = cfg_.generator_config().single_trace
                     ? Var<S>::constant(Tensor<S>::scalar(0))
                     : inpaint_mask_loss(spoof_tr.P, additive_trace(spoof_tr, band),
                                         batch.spoof_p0, static_cast<S>(cfg_.weights.beta));
    Var<S> l_r = trace_reg_loss(out.traces, static_cast<S>(band.lambda_reg));

    // ---- step 2: hierarchical reconstruction, warped synthesis, GAN losses
    Var<S> l_g = Var<S>::constant(Tensor<S>::scalar(0));
    Var<S> l_d;
    HierarchicalRecon<Var<S>> hier;
    Var<S> synth;
    std::vector<int> pairing;
    Tensor<S> offsets;
    Var<S> spoof_const = Var<S>::constant(batch.spoof_images);
    BasicTraceSet<Var<S>> warped_tr;
    Var<S> warped_src;
    Tensor<S> target_live;

    if (cfg_.run_step2()) {
      hier = reconstruct_hierarchy(spoof_const, spoof_tr, band);

      pairing = draw_pairing(n_spoof, n_live);
      offsets = dense_offsets(batch, pairing);
      Var<S> off_const = Var<S>::constant(offsets);
      warped_tr.B = warp(spoof_tr.B, off_const);
      warped_tr.C = warp(spoof_tr.C, off_const);
      warped_tr.T = warp(spoof_tr.T, off_const);
      warped_tr.P = warp(spoof_tr.P, off_const);
      warped_tr.I_P = warp(spoof_tr.I_P, off_const);
      warped_src = warp(spoof_const, off_const);
      target_live = gather_rows(batch.live_images, pairing);
      synth = synthesize_spoof(Var<S>::constant(target_live), warped_tr, warped_src, band);

      {
        FreezeGuard<S> freeze(disc_.params());
        l_g = adv_g_loss<S>({disc_.discriminate(hier.low, 1, true),
                             disc_.discriminate(hier.mid, 2, true),
                             disc_.discriminate(hier.hi, 3, true),
                             disc_.discriminate(synth, 4, true)});
      }
    }

    // generator update from the step-1/step-2 objective
    Var<S> g_total = step1_total(l_depth, l_g, l_p, l_r, cfg_.weights);
    rec.depth = value_of(l_depth);
    rec.adv_g = value_of(l_g);
    rec.inpaint = value_of(l_p);
    rec.reg = value_of(l_r);
    backward(g_total);
    g_opt_.step(gen_.params(), lr);

    // discriminator update on real pairs vs detached synthetics
    if (cfg_.run_step2()) {
      Var<S> live_const = Var<S>::constant(batch.live_images);
      l_d = adv_d_loss<S>({disc_.discriminate(live_const, 1, true),
                           disc_.discriminate(live_const, 2, true),
                           disc_.discriminate(live_const, 3, true),
                           disc_.discriminate(spoof_const, 4, true)},
                          {disc_.discriminate(detach(hier.low), 1, true),
                           disc_.discriminate(detach(hier.mid), 2, true),
                           disc_.discriminate(detach(hier.hi), 3, true),
                           disc_.discriminate(detach(synth), 4, true)});
      rec.adv_d = value_of(l_d);
      backward(l_d);
      d_opt_.step(disc_.params(), lr * cfg_.d_lr_factor);
    }

    // ---- step 3: harder synthesized samples, supervised trace recovery
    if (cfg_.run_step3()) {
      TraceSet<S> wtr;
      wtr.B = warped_tr.B.val();
      wtr.C = warped_tr.C.val();
      wtr.T = warped_tr.T.val();
      wtr.P = warped_tr.P.val();
      wtr.I_P = warped_tr.I_P.val();
      const Tensor<S>& wsrc = warped_src.val();

      std::vector<Tensor<S>> hard_rows, target_rows;
      for (int j = 0; j < n_spoof; ++j) {
        TraceSet<S> tr_j = slice_traceset_row(wtr, j);
        tr_j = perturb_traces(tr_j, rng_);
        Tensor<S> live_j = slice_batch(target_live, j, j + 1);
        Tensor<S> src_j = slice_batch(wsrc, j, j + 1);
        Tensor<S> hard_j = synthesize_spoof(live_j, tr_j, src_j, band);
        target_rows.push_back(reconstruct_live(hard_j, tr_j, band));
        hard_rows.push_back(std::move(hard_j));
      }
      Tensor<S> hard = stack_rows(hard_rows);
      Tensor<S> target = stack_rows(target_rows);

      Tensor<S> images3 = stack_batch<S>({&batch.live_images, &hard});
      GeneratorOutput<S> out3 = gen_.forward(images3, true);
      BasicTraceSet<Var<S>> hard_tr = slice_traces(out3.traces, n_live, n_live + n_spoof);
      Var<S> est = reconstruct_live(Var<S>::constant(hard), hard_tr, band);
      Var<S> l_s = synth_pixel_loss(est, Var<S>::constant(std::move(target)));
      Var<S> l_h = depth_loss(slice_batch(out3.depth, n_live, n_live + n_spoof),
                              Var<S>::constant(Tensor<S>({n_spoof, k, k, 1})), cfg_.depth_mode);
      rec.synth = value_of(l_s);
      rec.hard_depth = value_of(l_h);
      backward(step3_total(l_s, l_h, cfg_.weights));
      g_opt_.step(gen_.params(), lr);
    }

    if (!rec.finite())
      throw std::runtime_error("train_iteration: non-finite loss at iteration " +
                               std::to_string(iter_) + " (" + rec.describe() + ")");
    ++iter_;
    return rec;
  }

  /// Assembles a balanced batch from dataset indices (first half live, second
  /// half spoof, drawn uniformly with replacement).
  TrainBatch<S> sample_batch(const Dataset& ds, const std::vector<int>& live_ids,
                             const std::vector<int>& spoof_ids) {
    const int half = cfg_.batch_size / 2;
    std::uniform_int_distribution<int> dlive(0, static_cast<int>(live_ids.size()) - 1);
    std::uniform_int_distribution<int> dspoof(0, static_cast<int>(spoof_ids.size()) - 1);
    std::vector<int> li(half), si(half);
    for (int i = 0; i < half; ++i) li[i] = live_ids[dlive(rng_)];
    for (int i = 0; i < half; ++i) si[i] = spoof_ids[dspoof(rng_)];

    TrainBatch<S> b;
    std::vector<const Tensor<float>*> imgs, depths, p0s;
    for (int id : li) {
      imgs.push_back(&ds.samples[id].image);
      depths.push_back(&ds.samples[id].depth_gt);
      b.live_landmarks.push_back(ds.samples[id].landmarks);
    }
    b.live_images = stack_batch<float>(imgs).template cast<S>();
    b.live_depth = stack_batch<float>(depths).template cast<S>();
    imgs.clear();
    for (int id : si) {
      imgs.push_back(&ds.samples[id].image);
      p0s.push_back(&ds.samples[id].p0);
      b.spoof_landmarks.push_back(ds.samples[id].landmarks);
      b.spoof_meshes.push_back(&mesh_for(ds, id));
    }
    b.spoof_images = stack_batch<float>(imgs).template cast<S>();
    b.spoof_p0 = stack_batch<float>(p0s).template cast<S>();
    return b;
  }

  /// Full training driver: loss CSV, periodic checkpoints, resumable.
  void fit(const Dataset& ds, const std::vector<int>& train_ids, const std::string& out_dir,
           const std::function<void(const LossRecord&)>& on_iteration = {}) {
    std::vector<int> live_ids, spoof_ids;
    for (int id : train_ids)
      (ds.samples[id].is_spoof ? spoof_ids : live_ids).push_back(id);
    if (live_ids.empty() || spoof_ids.empty())
      throw std::runtime_error("fit: training split must contain both live and spoof samples");

    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/losses.csv";
    const bool fresh = iter_ == 0;
    std::ofstream csv(csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (fresh) csv << LossRecord::csv_header() << "\n";

    while (iter_ < cfg_.max_iterations) {
      TrainBatch<S> batch = sample_batch(ds, live_ids, spoof_ids);
      const LossRecord rec = train_iteration(batch);
      csv << rec.csv_row() << "\n";
      if (on_iteration) on_iteration(rec);
      if (iter_ % cfg_.checkpoint_every == 0 && iter_ < cfg_.max_iterations)
        save_checkpoint(out_dir + "/checkpoint_" + std::to_string(iter_) + ".star");
    }
    save_checkpoint(out_dir + "/checkpoint_final.star");
  }

  void save_checkpoint(const std::string& path) {
    TensorArchive ar;
    std::ostringstream rng_state;
    rng_state << rng_;
    std::ostringstream meta;
    meta << "{\"kind\":\"checkpoint\",\"version\":1,\"iteration\":" << iter_
         << ",\"g_opt_steps\":" << g_opt_.step_count()
         << ",\"d_opt_steps\":" << d_opt_.step_count() << ",\"rng\":\"" << rng_state.str()
         << "\",\"config\":" << train_config_to_json(cfg_) << "}";
    ar.meta = meta.str();
    for (const auto& [name, p] : gen_.params().params) ar.put(name, p.val());
    for (const auto& [name, t] : gen_.params().buffers) ar.put(name, t.val());
    for (const auto& [name, p] : disc_.params().params) ar.put(name, p.val());
    for (const auto& [name, t] : disc_.params().buffers) ar.put(name, t.val());
    for (const auto& [name, t] : g_opt_.state_tensors(gen_.params(), "opt.g.")) ar.put(name, *t);
    for (const auto& [name, t] : d_opt_.state_tensors(disc_.params(), "opt.d.")) ar.put(name, *t);
    ar.save(path);
  }

  static Trainer restore(const std::string& path) {
    return restore_from(TensorArchive::load(path));
  }

  static Trainer restore_from(const TensorArchive& ar) {
    const std::string& meta = ar.meta;
    Trainer t(train_config_from_json(json_field_object(meta, "config")));
    t.iter_ = json_field_int(meta, "iteration");
    t.g_opt_.set_step_count(json_field_int(meta, "g_opt_steps"));
    t.d_opt_.set_step_count(json_field_int(meta, "d_opt_steps"));
    std::istringstream rs(json_field_string(meta, "rng"));
    rs >> t.rng_;
    auto load_set = [&ar](ParamSet<S>& ps) {
      for (auto& [name, p] : ps.params) p.mutable_val() = ar.get_f32(name).template cast<S>();
      for (auto& [name, buf] : ps.buffers) buf.mutable_val() = ar.get_f32(name).template cast<S>();
    };
    load_set(t.gen_.params());
    load_set(t.disc_.params());
    for (auto& [name, buf] : t.g_opt_.state_tensors(t.gen_.params(), "opt.g."))
      if (ar.has(name)) *buf = ar.get_f32(name).template cast<S>();
    for (auto& [name, buf] : t.d_opt_.state_tensors(t.disc_.params(), "opt.d."))
      if (ar.has(name)) *buf = ar.get_f32(name).template cast<S>();
    return t;
  }

 private:
  static const TrainConfig& validated(const TrainConfig& cfg) {
    cfg.validate();
    return cfg;
  }

  static std::uint32_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return static_cast<std::uint32_t>((x ^ (x >> 31)) & 0xffffffffULL);
  }

  static Tensor<S> zeros_like_depth(int b, int k) { return Tensor<S>({b, k, k, 1}); }

  static double value_of(const Var<S>& v) { return static_cast<double>(v.val()[0]); }

  static BasicTraceSet<Var<S>> slice_traces(const BasicTraceSet<Var<S>>& tr, int b0, int b1) {
    BasicTraceSet<Var<S>> out;
    out.B = slice_batch(tr.B, b0, b1);
    out.C = slice_batch(tr.C, b0, b1);
    out.T = slice_batch(tr.T, b0, b1);
    out.P = slice_batch(tr.P, b0, b1);
    out.I_P = slice_batch(tr.I_P, b0, b1);
    return out;
  }

  static TraceSet<S> slice_traceset_row(const TraceSet<S>& tr, int j) {
    TraceSet<S> out;
    out.B = slice_batch(tr.B, j, j + 1);
    out.C = slice_batch(tr.C, j, j + 1);
    out.T = slice_batch(tr.T, j, j + 1);
    out.P = slice_batch(tr.P, j, j + 1);
    out.I_P = slice_batch(tr.I_P, j, j + 1);
    return out;
  }

  static Tensor<S> stack_rows(const std::vector<Tensor<S>>& rows) {
    std::vector<const Tensor<S>*> ptrs;
    for (const auto& r : rows) ptrs.push_back(&r);
    return stack_batch(ptrs);
  }

  static Tensor<S> gather_rows(const Tensor<S>& t, const std::vector<int>& rows) {
    std::vector<Tensor<S>> parts;
    for (int r : rows) parts.push_back(slice_batch(t, r, r + 1));
    return stack_rows(parts);
  }

  /// Hierarchical reconstruction; the single-trace ablation reconstructs at
  /// full band and resizes, mirroring the single-component formulation.
  HierarchicalRecon<Var<S>> reconstruct_hierarchy(const Var<S>& img,
                                                  const BasicTraceSet<Var<S>>& tr,
                                                  const BandConfig& band) {
    if (!cfg_.generator_config().single_trace) return hierarchical_reconstruct(img, tr, band);
    HierarchicalRecon<Var<S>> r;
    r.hi = reconstruct_live(img, tr, band);
    r.mid = bandpass_low(r.hi, band.n2);
    r.low = bandpass_low(r.hi, band.n1);
    return r;
  }

  std::vector<int> draw_pairing(int n_spoof, int n_live) {
    std::uniform_int_distribution<int> d(0, n_live - 1);
    std::vector<int> pairing(n_spoof);
    for (int& p : pairing) p = d(rng_);
    return pairing;
  }

  /// Per-spoof dense offset fields toward the paired live geometry.
  Tensor<S> dense_offsets(const TrainBatch<S>& batch, const std::vector<int>& pairing) {
    const int n = cfg_.band.N;
    const Tensor<double> grid = pixel_grid<double>(n);
    std::vector<Tensor<S>> rows;
    for (size_t j = 0; j < pairing.size(); ++j) {
      const LandmarkSet& src = batch.spoof_landmarks[j];
      const LandmarkSet& dst = batch.live_landmarks[pairing[j]];
      const TriMesh* mesh = j < batch.spoof_meshes.size() ? batch.spoof_meshes[j] : nullptr;
      TriMesh local;
      if (!mesh) {
        local = build_mesh(src, n);
        mesh = &local;
      }
      Tensor<double> dense = densify_offset(grid, src, sparse_offset(src, dst), *mesh);
      Tensor<S> row({1, n, n, 2});
      for (std::int64_t i = 0; i < dense.size(); ++i) row[i] = static_cast<S>(dense[i]);
      rows.push_back(std::move(row));
    }
    return stack_rows(rows);
  }

  const TriMesh& mesh_for(const Dataset& ds, int id) {
    auto it = mesh_cache_.find(id);
    if (it == mesh_cache_.end())
      it = mesh_cache_.emplace(id, build_mesh(ds.samples[id].landmarks, cfg_.band.N)).first;
    return it->second;
  }

  TrainConfig cfg_;
  std::mt19937 init_rng_;
  std::mt19937 rng_;
  Generator<S> gen_;
  DiscriminatorBank<S> disc_;
  Optimizer<S> g_opt_;
  Optimizer<S> d_opt_;
  std::int64_t iter_ = 0;
  std::unordered_map<int, TriMesh> mesh_cache_;
};

}  // namespace spooftrace
