#include "spooftrace/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "spooftrace/checkpoint.hpp"
#include "spooftrace/png_io.hpp"

namespace fs = std::filesystem;

namespace spooftrace {

std::vector<int> Dataset::live_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i)
    if (!samples[i].is_spoof) out.push_back(i);
  return out;
}

std::vector<int> Dataset::spoof_indices() const {
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i)
    if (samples[i].is_spoof) out.push_back(i);
  return out;
}

namespace {

std::string sample_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "s%06d", i);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void write_dataset(const std::vector<ToySample>& samples, const std::string& dir,
                   const ToyConfig& cfg, bool force) {
  const fs::path root(dir);
  if (fs::exists(root) && !fs::is_empty(root) && !force)
    throw std::runtime_error("output directory not empty (use force): " + dir);
  fs::create_directories(root / "samples");

  std::ofstream manifest(root / "manifest.csv");
  manifest << "id,label,medium,partial_region,live_id\n";
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) {
    const ToySample& s = samples[i];
    const std::string id = sample_id(i);
    manifest << id << "," << (s.is_spoof ? "spoof" : "live") << "," << to_string(s.medium) << ","
             << (s.medium == Medium::partial_like
                     ? (s.partial_region == PartialRegion::eye ? "eye" : "mouth")
                     : "")
             << "," << s.live_index << "\n";

    const fs::path base = root / "samples" / id;
    write_png_rgb(base.string() + ".png", s.image);
    write_png_gray(base.string() + "_p0.png", s.p0);
    write_png_gray16(base.string() + "_depth.png", s.depth_gt);
    save_landmarks(s.landmarks, base.string() + "_landmarks.txt");
    if (s.is_spoof) {
      TensorArchive ar;
      ar.meta = std::string("{\"kind\":\"gt_traces\",\"id\":\"") + id + "\"}";
      ar.put("B", s.gt_traces.B);
      ar.put("C", s.gt_traces.C);
      ar.put("T", s.gt_traces.T);
      ar.put("P", s.gt_traces.P);
      ar.put("I_P", s.gt_traces.I_P);
      ar.put("content", s.spoof_content);
      ar.save(base.string() + "_traces.star");
    }
  }
  manifest.close();

  nlohmann::json meta;
  meta["image_size"] = cfg.N;
  meta["landmark_count"] = cfg.Q;
  meta["seed"] = cfg.seed;
  meta["count"] = static_cast<int>(samples.size());
  std::ofstream mf(root / "dataset.json");
  mf << meta.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  if (!fs::exists(root / "manifest.csv"))
    throw std::runtime_error("not a dataset directory (missing manifest.csv): " + dir);

  Dataset ds;
  ds.root = dir;
  {
    std::ifstream mf(root / "dataset.json");
    if (mf) {
      nlohmann::json meta = nlohmann::json::parse(mf);
      ds.meta.image_size = meta.value("image_size", 64);
      ds.meta.landmark_count = meta.value("landmark_count", 140);
      ds.meta.seed = meta.value("seed", 0ULL);
      ds.meta.count = meta.value("count", 0);
    }
  }

  std::ifstream manifest(root / "manifest.csv");
  std::string line;
  std::getline(manifest, line);  // header
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() < 5) throw std::runtime_error("malformed manifest line: " + line);
    DatasetSample s;
    s.id = f[0];
    s.is_spoof = f[1] == "spoof";
    s.medium = medium_from_string(f[2]);
    s.partial_region = f[3] == "mouth" ? PartialRegion::mouth : PartialRegion::eye;
    s.live_index = std::stoi(f[4]);
    const fs::path base = root / "samples" / s.id;
    s.image = read_png_rgb(base.string() + ".png");
    s.p0 = read_png_gray(base.string() + "_p0.png");
    s.depth_gt = read_png_gray16(base.string() + "_depth.png");
    s.landmarks = load_landmarks(base.string() + "_landmarks.txt", as4(s.image).h);
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw std::runtime_error("dataset is empty: " + dir);
  return ds;
}

std::optional<TraceSet<float>> load_gt_traces(const std::string& dir, const std::string& id) {
  const fs::path path = fs::path(dir) / "samples" / (id + "_traces.star");
  if (!fs::exists(path)) return std::nullopt;
  const TensorArchive ar = TensorArchive::load(path.string());
  TraceSet<float> tr;
  tr.B = ar.get_f32("B");
  tr.C = ar.get_f32("C");
  tr.T = ar.get_f32("T");
  tr.P = ar.get_f32("P");
  tr.I_P = ar.get_f32("I_P");
  return tr;
}

}  // namespace spooftrace
