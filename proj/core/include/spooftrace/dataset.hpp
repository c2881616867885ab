#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spooftrace/toydata.hpp"

namespace spooftrace {

/// On-disk layout (documented in docs/file_formats.md):
///   manifest.csv                       id,label,medium,partial_region,live_id
///   dataset.json                       image_size, landmark_count, seed, count
///   samples/<id>.png                   8-bit RGB image
///   samples/<id>_p0.png                8-bit gray preliminary mask
///   samples/<id>_depth.png             16-bit gray depth target
///   samples/<id>_landmarks.txt         one "x y" line per landmark
///   samples/<id>_traces.star           ground-truth trace archive (spoof only)
struct DatasetMeta {
  int image_size = 64;
  int landmark_count = 140;
  std::uint64_t seed = 0;
  int count = 0;
};

struct DatasetSample {
  std::string id;
  bool is_spoof = false;
  Medium medium = Medium::none;
  PartialRegion partial_region = PartialRegion::eye;
  int live_index = -1;
  Tensor<float> image;     // [N,N,3]
  Tensor<float> p0;        // [N,N,1]
  Tensor<float> depth_gt;  // [K,K,1]
  LandmarkSet landmarks;
};

struct Dataset {
  DatasetMeta meta;
  std::string root;
  std::vector<DatasetSample> samples;

  std::vector<int> live_indices() const;
  std::vector<int> spoof_indices() const;
};

void write_dataset(const std::vector<ToySample>& samples, const std::string& dir,
                   const ToyConfig& cfg, bool force);

Dataset load_dataset(const std::string& dir);

/// Ground-truth traces for one sample, from its archive.
std::optional<TraceSet<float>> load_gt_traces(const std::string& dir, const std::string& id);

}  // namespace spooftrace
