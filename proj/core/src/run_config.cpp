#include "spooftrace/run_config.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace spooftrace {

using nlohmann::json;

Ablation ablation_from_string(const std::string& s) {
  if (s == "full") return Ablation::full;
  if (s == "step1") return Ablation::step1;
  if (s == "step12") return Ablation::step12;
  if (s == "single-trace" || s == "single_trace") return Ablation::single_trace;
  throw std::invalid_argument("unknown ablation: " + s);
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::full: return "full";
    case Ablation::step1: return "step1";
    case Ablation::step12: return "step12";
    case Ablation::single_trace: return "single-trace";
  }
  return "full";
}

namespace {

json train_config_json(const TrainConfig& c) {
  json j;
  j["lr"] = c.lr;
  j["max_iterations"] = c.max_iterations;
  j["batch_size"] = c.batch_size;
  j["lr_decay_every"] = c.lr_decay_every;
  j["lr_decay_factor"] = c.lr_decay_factor;
  j["d_lr_factor"] = c.d_lr_factor;
  j["optimizer"] = to_string(c.optimizer);
  j["depth_loss"] = c.depth_mode == DepthLossMode::mean_abs ? "mean_abs" : "mean_square";
  j["ablation"] = to_string(c.ablation);
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  j["amp_mid"] = c.amp_mid;
  j["amp_high"] = c.amp_high;
  j["band"] = {{"N", c.band.N}, {"n1", c.band.n1}, {"n2", c.band.n2},
               {"lambda_reg", c.band.lambda_reg}};
  j["weights"] = {{"alpha1", c.weights.alpha1}, {"alpha2", c.weights.alpha2},
                  {"alpha3", c.weights.alpha3}, {"alpha4", c.weights.alpha4},
                  {"alpha5", c.weights.alpha5}, {"alpha6", c.weights.alpha6},
                  {"beta", c.weights.beta},     {"alpha0", c.weights.alpha0}};
  return j;
}

TrainConfig train_config_from(const json& j) {
  TrainConfig c;
  c.lr = j.value("lr", c.lr);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr_decay_every = j.value("lr_decay_every", c.lr_decay_every);
  c.lr_decay_factor = j.value("lr_decay_factor", c.lr_decay_factor);
  c.d_lr_factor = j.value("d_lr_factor", c.d_lr_factor);
  c.optimizer = optimizer_from_string(j.value("optimizer", std::string("adam")));
  c.depth_mode = j.value("depth_loss", std::string("mean_abs")) == "mean_square"
                     ? DepthLossMode::mean_square
                     : DepthLossMode::mean_abs;
  c.ablation = ablation_from_string(j.value("ablation", std::string("full")));
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.seed = j.value("seed", c.seed);
  c.amp_mid = j.value("amp_mid", c.amp_mid);
  c.amp_high = j.value("amp_high", c.amp_high);
  if (j.contains("band")) {
    c.band.N = j["band"].value("N", c.band.N);
    c.band.n1 = j["band"].value("n1", c.band.n1);
    c.band.n2 = j["band"].value("n2", c.band.n2);
    c.band.lambda_reg = j["band"].value("lambda_reg", c.band.lambda_reg);
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    c.weights.alpha1 = w.value("alpha1", c.weights.alpha1);
    c.weights.alpha2 = w.value("alpha2", c.weights.alpha2);
    c.weights.alpha3 = w.value("alpha3", c.weights.alpha3);
    c.weights.alpha4 = w.value("alpha4", c.weights.alpha4);
    c.weights.alpha5 = w.value("alpha5", c.weights.alpha5);
    c.weights.alpha6 = w.value("alpha6", c.weights.alpha6);
    c.weights.beta = w.value("beta", c.weights.beta);
    c.weights.alpha0 = w.value("alpha0", c.weights.alpha0);
  }
  return c;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& cfg) { return train_config_json(cfg).dump(); }

TrainConfig train_config_from_json(const std::string& text) {
  return train_config_from(json::parse(text));
}

std::string json_field_object(const std::string& text, const std::string& key) {
  return json::parse(text).at(key).dump();
}

std::int64_t json_field_int(const std::string& text, const std::string& key) {
  return json::parse(text).at(key).get<std::int64_t>();
}

std::string json_field_string(const std::string& text, const std::string& key) {
  return json::parse(text).at(key).get<std::string>();
}

std::string RunConfig::to_json() const {
  json j;
  j["train"] = train_config_json(train);
  j["data_dir"] = data_dir;
  j["out_dir"] = out_dir;
  j["tool_version"] = kToolVersion;
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  RunConfig c;
  if (j.contains("train")) c.train = train_config_from(j["train"]);
  c.data_dir = j.value("data_dir", std::string());
  c.out_dir = j.value("out_dir", std::string());
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json(text);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << to_json() << "\n";
}

void write_run_manifest(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  cfg.save(cfg.out_dir + "/run_manifest.json");
}

}  // namespace spooftrace
