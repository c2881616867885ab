// spooftrace command-line tool: toy dataset generation, adversarial training,
// evaluation, trace visualization and spoof synthesis.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "spooftrace/dataset.hpp"
#include "spooftrace/inference.hpp"
#include "spooftrace/png_io.hpp"
#include "spooftrace/run_config.hpp"
#include "spooftrace/train.hpp"

namespace fs = std::filesystem;
using namespace spooftrace;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<int> all_indices(const Dataset& ds) {
  std::vector<int> out(ds.samples.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(i);
  return out;
}

std::vector<ToySample> dataset_to_toys(const Dataset& ds) {
  std::vector<ToySample> out;
  out.reserve(ds.samples.size());
  for (const auto& s : ds.samples) {
    ToySample t;
    t.is_spoof = s.is_spoof;
    t.medium = s.medium;
    t.partial_region = s.partial_region;
    t.live_index = s.live_index;
    out.push_back(std::move(t));
  }
  return out;
}

/// Resolves --protocol/--held-out into id lists; "none" uses every sample.
ProtocolSplit resolve_split(const Dataset& ds, const std::string& protocol,
                            const std::string& held_out, std::uint64_t split_seed) {
  ProtocolSplit split;
  if (protocol == "none") {
    split.train_ids = all_indices(ds);
    split.test_ids = all_indices(ds);
    return split;
  }
  const ProtocolMode mode = protocol_from_string(protocol);
  Medium held = Medium::none;
  if (mode != ProtocolMode::known) {
    if (held_out.empty())
      throw UsageError("protocol '" + protocol + "' requires --held-out <medium>");
    held = medium_from_string(held_out);
  }
  return make_splits(dataset_to_toys(ds), mode, held, split_seed);
}

// ---- panel assembly for the visualization commands ----

Tensor<float> gray_to_rgb(const Tensor<float>& g) {
  const Shape4 s = as4(g);
  Tensor<float> out({s.h, s.w, 3});
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c)
        out.at(y, x, c) = g[static_cast<std::int64_t>(y) * s.w + x];
  return out;
}

/// Signed traces shifted to mid-gray: 0.5 + 0.5 * value, clamped.
Tensor<float> trace_panel(const Tensor<float>& t) {
  return clamp01(map(t, [](float v) { return 0.5f + 0.5f * v; }));
}

Tensor<float> single(const Tensor<float>& batched) {
  const Shape4 s = as4(batched);
  Tensor<float> out({s.h, s.w, s.c});
  std::copy(batched.data(), batched.data() + batched.size(), out.data());
  return out;
}

Tensor<float> panel_row(const std::vector<Tensor<float>>& panels) {
  const Shape4 s = as4(panels.front());
  Tensor<float> row({s.h, s.w * static_cast<int>(panels.size()), 3});
  for (size_t p = 0; p < panels.size(); ++p)
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        for (int c = 0; c < 3; ++c)
          row.at(y, static_cast<int>(p) * s.w + x, c) = panels[p].at(y, x, c);
  return row;
}

Tensor<float> panel_column(const std::vector<Tensor<float>>& rows) {
  const Shape4 s = as4(rows.front());
  Tensor<float> out({s.h * static_cast<int>(rows.size()), s.w, 3});
  for (size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].data(), rows[r].data() + rows[r].size(),
              out.data() + static_cast<std::int64_t>(r) * rows[r].size());
  return out;
}

// ---- subcommand implementations ----

int cmd_make_toy_data(const std::string& out_dir, int count, int size, int landmarks,
                      std::uint64_t seed, bool force) {
  if (count <= 0) throw UsageError("--count must be positive");
  if (size % 8 != 0 || size < 16) throw UsageError("--size must be a multiple of 8, >= 16");
  ToyConfig cfg;
  cfg.N = size;
  cfg.Q = landmarks;
  cfg.seed = seed;
  cfg.count = count;
  const std::vector<ToySample> samples = gen_dataset(cfg);
  write_dataset(samples, out_dir, cfg, force);
  std::cout << "wrote " << samples.size() << " samples to " << out_dir << "\n";
  return 0;
}

int cmd_train(RunConfig cfg, const std::string& protocol, const std::string& held_out,
              std::uint64_t split_seed) {
  const Dataset ds = load_dataset(cfg.data_dir);
  if (ds.meta.image_size != cfg.train.band.N)
    throw std::runtime_error("dataset image size " + std::to_string(ds.meta.image_size) +
                             " does not match configured N=" + std::to_string(cfg.train.band.N));
  const ProtocolSplit split = resolve_split(ds, protocol, held_out, split_seed);
  write_run_manifest(cfg);

  Trainer<float> trainer(cfg.train);
  trainer.fit(ds, split.train_ids, cfg.out_dir, [&](const LossRecord& rec) {
    if (rec.iteration == 1 || rec.iteration % 100 == 0)
      std::cout << "iter " << rec.iteration << " " << rec.describe() << "\n";
  });
  std::cout << "training complete at iteration " << trainer.iteration() << "\n";
  return 0;
}

int cmd_eval(const std::string& data_dir, const std::string& train_data_dir,
             const std::string& checkpoint, const std::string& out_dir,
             const std::string& protocol, const std::string& held_out, std::uint64_t split_seed,
             double alpha0, bool sweep, const std::string& embeddings_path) {
  const Dataset ds = load_dataset(data_dir);
  const ProtocolSplit split = resolve_split(ds, protocol, held_out, split_seed);
  Generator<float> gen = load_generator(checkpoint);

  EvalOptions opts;
  opts.keep_embeddings = !embeddings_path.empty();
  const std::vector<SampleEvaluation> test_evals = evaluate_samples(gen, ds, split.test_ids, opts);

  // calibration scores: a separate training dataset when given, otherwise
  // this dataset's train split
  std::vector<SampleEvaluation> train_evals;
  if (!train_data_dir.empty()) {
    const Dataset train_ds = load_dataset(train_data_dir);
    train_evals = evaluate_samples(gen, train_ds, all_indices(train_ds));
  } else {
    train_evals = evaluate_samples(gen, ds, split.train_ids);
  }

  if (sweep) {
    std::vector<double> depth_terms, trace_terms;
    std::vector<bool> labels;
    for (const auto& e : train_evals) {
      depth_terms.push_back(e.depth_term);
      trace_terms.push_back(e.trace_term);
      labels.push_back(e.is_spoof);
    }
    alpha0 = sweep_alpha0(depth_terms, trace_terms, labels,
                          {0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0});
    std::cout << "alpha0 swept on calibration scores: " << alpha0 << "\n";
  }

  const std::vector<ScoredSample> test_scores = to_scored(test_evals, alpha0);
  const std::vector<ScoredSample> train_scores = to_scored(train_evals, alpha0);
  const double threshold = compute_eer(train_scores).threshold;

  const EerResult eer = compute_eer(test_scores);
  const AcerResult acer = compute_acer(test_scores, threshold);
  const double tdr = tdr_at_fdr(test_scores, 0.005);

  fs::create_directories(out_dir);
  {
    std::ofstream scores(out_dir + "/scores.csv");
    scores << "sample_id,score,label,medium\n";
    char buf[160];
    for (const auto& s : test_scores) {
      std::snprintf(buf, sizeof(buf), "%s,%.9e,%s,%s\n", s.id.c_str(), s.score,
                    s.is_spoof ? "spoof" : "live", s.is_spoof ? s.medium.c_str() : "live");
      scores << buf;
    }
  }
  {
    std::ofstream metrics(out_dir + "/metrics.csv");
    metrics << "metric,value\n";
    char buf[96];
    const auto put = [&](const char* name, double v) {
      std::snprintf(buf, sizeof(buf), "%s,%.9e\n", name, v);
      metrics << buf;
    };
    put("eer", eer.eer);
    put("eer_threshold", eer.threshold);
    put("train_threshold", threshold);
    put("apcer", acer.apcer);
    put("bpcer", acer.bpcer);
    put("acer", acer.acer);
    put("tdr_at_fdr_0.005", tdr);
    put("alpha0", alpha0);
  }
  {
    std::ofstream report(out_dir + "/report.txt");
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "samples evaluated : %zu\n"
                  "alpha0            : %.4g\n"
                  "EER               : %7.3f %%\n"
                  "APCER             : %7.3f %%\n"
                  "BPCER             : %7.3f %%\n"
                  "ACER              : %7.3f %%\n"
                  "TDR @ FDR=0.5%%    : %7.3f %%\n",
                  test_scores.size(), alpha0, 100.0 * eer.eer, 100.0 * acer.apcer,
                  100.0 * acer.bpcer, 100.0 * acer.acer, 100.0 * tdr);
    report << buf;
    std::cout << buf;
  }
  if (!embeddings_path.empty()) {
    std::ofstream emb(embeddings_path);
    emb << "sample_id,label,medium";
    for (size_t i = 0; i < test_evals.front().f1_embedding.size(); ++i) emb << ",f1_" << i;
    for (size_t i = 0; i < test_evals.front().f2_embedding.size(); ++i) emb << ",f2_" << i;
    for (size_t i = 0; i < test_evals.front().f3_embedding.size(); ++i) emb << ",f3_" << i;
    emb << ",mean_abs_b,mean_abs_c,mean_abs_t,mean_p\n";
    for (const auto& e : test_evals) {
      emb << e.id << "," << (e.is_spoof ? "spoof" : "live") << ","
          << (e.is_spoof ? to_string(e.medium) : "live");
      for (float v : e.f1_embedding) emb << "," << v;
      for (float v : e.f2_embedding) emb << "," << v;
      for (float v : e.f3_embedding) emb << "," << v;
      emb << "," << e.mean_abs_b << "," << e.mean_abs_c << "," << e.mean_abs_t << ","
          << e.mean_p << "\n";
    }
  }
  return 0;
}

int cmd_disentangle(const std::string& checkpoint, const std::string& data_dir,
                    const std::string& out_dir, std::vector<std::string> ids, int count) {
  const Dataset ds = load_dataset(data_dir);
  Generator<float> gen = load_generator(checkpoint);
  const BandConfig band = gen.config().band;

  std::vector<int> indices;
  if (ids.empty()) {
    for (int i = 0; i < static_cast<int>(ds.samples.size()) && i < count; ++i)
      indices.push_back(i);
  } else {
    for (const auto& id : ids) {
      bool found = false;
      for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i)
        if (ds.samples[i].id == id) {
          indices.push_back(i);
          found = true;
          break;
        }
      if (!found) throw std::runtime_error("sample id not found in dataset: " + id);
    }
  }

  EvalOptions opts;
  opts.keep_traces = true;
  const std::vector<SampleEvaluation> evals = evaluate_samples(gen, ds, indices, opts);
  fs::create_directories(out_dir);
  for (size_t i = 0; i < evals.size(); ++i) {
    const SampleEvaluation& e = evals[i];
    const Tensor<float>& input = ds.samples[indices[i]].image;
    const Tensor<float> batched_input = stack_batch<float>({&input});
    const Tensor<float> recon = single(reconstruct_live(batched_input, e.traces, band));
    Tensor<float> overall(input.dims());
    for (std::int64_t j = 0; j < input.size(); ++j) overall[j] = input[j] - recon[j];
    // input | B | C | T | P | I_P | overall trace | reconstructed live
    const Tensor<float> grid = panel_row(
        {input, trace_panel(single(e.traces.B)), trace_panel(single(e.traces.C)),
         trace_panel(single(e.traces.T)), gray_to_rgb(single(e.traces.P)), single(e.traces.I_P),
         trace_panel(overall), clamp01(recon)});
    write_png_rgb(out_dir + "/" + e.id + "_grid.png", grid);
  }
  std::cout << "wrote " << evals.size() << " trace grids to " << out_dir << "\n";
  return 0;
}

int cmd_synthesize(const std::string& checkpoint, const std::string& data_dir,
                   const std::string& out_path, int n_sources, int n_targets, bool harder,
                   std::uint64_t seed) {
  const Dataset ds = load_dataset(data_dir);
  Generator<float> gen = load_generator(checkpoint);
  const BandConfig band = gen.config().band;
  const int n = band.N;

  std::vector<int> sources, targets;
  for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i) {
    if (ds.samples[i].is_spoof && static_cast<int>(sources.size()) < n_sources)
      sources.push_back(i);
    if (!ds.samples[i].is_spoof && static_cast<int>(targets.size()) < n_targets)
      targets.push_back(i);
  }
  if (sources.empty() || targets.empty())
    throw std::runtime_error("dataset must contain both spoof and live samples");

  EvalOptions opts;
  opts.keep_traces = true;
  const std::vector<SampleEvaluation> src_evals = evaluate_samples(gen, ds, sources, opts);

  std::mt19937 rng(static_cast<std::uint32_t>(seed));
  const Tensor<double> grid = pixel_grid<double>(n);
  std::vector<Tensor<float>> rows;

  // header row: neutral corner, then the source spoof faces
  std::vector<Tensor<float>> header{Tensor<float>::full({n, n, 3}, 0.5f)};
  for (int s : sources) header.push_back(ds.samples[s].image);
  rows.push_back(panel_row(header));

  for (int t : targets) {
    const DatasetSample& target = ds.samples[t];
    std::vector<Tensor<float>> cells{target.image};
    for (size_t si = 0; si < sources.size(); ++si) {
      const DatasetSample& src = ds.samples[sources[si]];
      const TriMesh mesh = build_mesh(src.landmarks, n);
      const Tensor<double> dense = densify_offset(
          grid, src.landmarks, sparse_offset(src.landmarks, target.landmarks), mesh);
      Tensor<float> offset({n, n, 2});
      for (std::int64_t j = 0; j < dense.size(); ++j) offset[j] = static_cast<float>(dense[j]);

      TraceSet<float> tr{single(src_evals[si].traces.B), single(src_evals[si].traces.C),
                         single(src_evals[si].traces.T), single(src_evals[si].traces.P),
                         single(src_evals[si].traces.I_P)};
      auto [warped_tr, warped_src] = warp_traceset(tr, src.image, offset);
      if (harder) warped_tr = perturb_traces(warped_tr, rng);
      cells.push_back(clamp01(synthesize_spoof(target.image, warped_tr, warped_src, band)));
    }
    rows.push_back(panel_row(cells));
  }

  const fs::path parent = fs::path(out_path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_png_rgb(out_path, panel_column(rows));
  std::cout << "wrote " << (sources.size() + 1) << "x" << (targets.size() + 1)
            << " synthesis matrix to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spoof trace disentanglement toolkit"};
  app.require_subcommand(1);

  auto* mk = app.add_subcommand("make-toy-data", "generate a synthetic face dataset");
  std::string mk_out;
  int mk_count = 1200, mk_size = 64, mk_landmarks = 140;
  std::uint64_t mk_seed = 1;
  bool mk_force = false;
  mk->add_option("--out", mk_out, "output directory")->required();
  mk->add_option("--count", mk_count, "total sample count (half live, half spoof)");
  mk->add_option("--size", mk_size, "image size N");
  mk->add_option("--landmarks", mk_landmarks, "landmark count Q");
  mk->add_option("--seed", mk_seed, "generation seed");
  mk->add_flag("--force", mk_force, "overwrite a non-empty output directory");

  auto* tr = app.add_subcommand("train", "run the three-step adversarial training");
  std::string tr_data, tr_out, tr_config, tr_ablation = "full", tr_protocol = "none", tr_held_out;
  std::uint64_t tr_seed = 0, tr_split_seed = 17;
  std::int64_t tr_max_iter = -1;
  int tr_batch = -1;
  double tr_lr = -1.0;
  bool tr_desk = false;
  tr->add_option("--data", tr_data, "dataset directory")->required();
  tr->add_option("--out", tr_out, "run output directory")->required();
  tr->add_option("--config", tr_config, "JSON config file (flags override)");
  tr->add_flag("--desk", tr_desk, "desk-scale preset (N=64, 2000 iterations)");
  tr->add_option("--seed", tr_seed, "training seed (overrides config)");
  tr->add_option("--max-iter", tr_max_iter, "iteration budget");
  tr->add_option("--batch-size", tr_batch, "minibatch size");
  tr->add_option("--lr", tr_lr, "initial learning rate");
  tr->add_option("--ablation", tr_ablation, "full | step1 | step12 | single-trace");
  tr->add_option("--protocol", tr_protocol, "none | known | unknown | open-set");
  tr->add_option("--held-out", tr_held_out, "held-out medium for unknown/open-set");
  tr->add_option("--split-seed", tr_split_seed, "protocol split seed");

  auto* ev = app.add_subcommand("eval", "score a dataset and report PAD metrics");
  std::string ev_data, ev_train_data, ev_ckpt, ev_out, ev_protocol = "none", ev_held_out,
      ev_embeddings;
  std::uint64_t ev_split_seed = 17;
  double ev_alpha0 = 1.0;
  bool ev_sweep = false;
  ev->add_option("--data", ev_data, "dataset directory to evaluate")->required();
  ev->add_option("--train-data", ev_train_data, "dataset for threshold/alpha0 calibration");
  ev->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  ev->add_option("--out", ev_out, "report output directory")->required();
  ev->add_option("--protocol", ev_protocol, "none | known | unknown | open-set");
  ev->add_option("--held-out", ev_held_out, "held-out medium for unknown/open-set");
  ev->add_option("--split-seed", ev_split_seed, "protocol split seed");
  ev->add_option("--alpha0", ev_alpha0, "trace weight in the spoofness score");
  ev->add_flag("--sweep-alpha0", ev_sweep, "pick alpha0 by EER sweep on calibration scores");
  ev->add_option("--dump-embeddings", ev_embeddings, "CSV path for pooled feature export");

  auto* di = app.add_subcommand("disentangle", "render trace component grids");
  std::string di_ckpt, di_data, di_out;
  std::vector<std::string> di_ids;
  int di_count = 8;
  di->add_option("--checkpoint", di_ckpt, "trained checkpoint")->required();
  di->add_option("--data", di_data, "dataset directory")->required();
  di->add_option("--out", di_out, "output directory")->required();
  di->add_option("--id", di_ids, "sample ids to render (default: first --count)");
  di->add_option("--count", di_count, "samples to render when no ids given");

  auto* sy = app.add_subcommand("synthesize", "render a source x target synthesis matrix");
  std::string sy_ckpt, sy_data, sy_out;
  int sy_sources = 4, sy_targets = 4;
  bool sy_harder = false;
  std::uint64_t sy_seed = 1;
  sy->add_option("--checkpoint", sy_ckpt, "trained checkpoint")->required();
  sy->add_option("--data", sy_data, "dataset directory")->required();
  sy->add_option("--out", sy_out, "output PNG path")->required();
  sy->add_option("--sources", sy_sources, "number of source spoof faces");
  sy->add_option("--targets", sy_targets, "number of target live faces");
  sy->add_flag("--harder", sy_harder, "randomly attenuate trace components");
  sy->add_option("--seed", sy_seed, "perturbation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  }

  try {
    if (mk->parsed())
      return cmd_make_toy_data(mk_out, mk_count, mk_size, mk_landmarks, mk_seed, mk_force);
    if (tr->parsed()) {
      RunConfig cfg;
      if (!tr_config.empty()) cfg = RunConfig::from_file(tr_config);
      if (tr_desk) cfg.train = TrainConfig::desk();
      cfg.data_dir = tr_data;
      cfg.out_dir = tr_out;
      if (tr_seed != 0) cfg.train.seed = tr_seed;
      if (tr_max_iter > 0) cfg.train.max_iterations = tr_max_iter;
      if (tr_batch > 0) cfg.train.batch_size = tr_batch;
      if (tr_lr > 0) cfg.train.lr = tr_lr;
      cfg.train.ablation = ablation_from_string(tr_ablation);
      return cmd_train(cfg, tr_protocol, tr_held_out, tr_split_seed);
    }
    if (ev->parsed())
      return cmd_eval(ev_data, ev_train_data, ev_ckpt, ev_out, ev_protocol, ev_held_out,
                      ev_split_seed, ev_alpha0, ev_sweep, ev_embeddings);
    if (di->parsed()) return cmd_disentangle(di_ckpt, di_data, di_out, di_ids, di_count);
    if (sy->parsed())
      return cmd_synthesize(sy_ckpt, sy_data, sy_out, sy_sources, sy_targets, sy_harder, sy_seed);
  } catch (const UsageError& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error[usage]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
