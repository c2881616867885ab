#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spooftrace/evalkit.hpp"
#include "spooftrace/trace_algebra.hpp"
#include "spooftrace/warp3d.hpp"

namespace spooftrace {

enum class Medium { none, print_like, replay_like, mask_like, partial_like };
enum class PartialRegion { eye, mouth };

Medium medium_from_string(const std::string& s);
std::string to_string(Medium m);

/// One synthetic sample. Spoof samples carry exact ground-truth traces: the
/// stored image equals apply_sgf(paired live, gt_traces, spoof_content).
struct ToySample {
  Tensor<float> image;          // [N,N,3] in [0,1]
  bool is_spoof = false;
  Medium medium = Medium::none;
  PartialRegion partial_region = PartialRegion::eye;
  LandmarkSet landmarks;
  Tensor<float> depth_gt;       // [K,K,1]; zero for spoof
  TraceSet<float> gt_traces;    // zero components for live
  Tensor<float> spoof_content;  // inpainting-source image (partial attacks)
  Tensor<float> p0;             // [N,N,1] preliminary not-to-inpaint mask
  int live_index = -1;          // own index for live, paired live index for spoof
};

struct ToyConfig {
  int N = 64;
  int Q = 140;
  std::uint64_t seed = 1;
  int count = 1200;

  BandConfig band() const {
    BandConfig b;
    b.N = N;
    b.n1 = N / 8;
    b.n2 = N / 2;
    return b;
  }
};

/// Pure function of (seed, index): procedural live face with analytic
/// landmarks and a smooth depth bump.
ToySample gen_live(std::uint64_t seed, int index, int n, int q);

/// Derives a spoof from a live sample with a closed-form ground-truth trace
/// set for the given medium.
ToySample gen_spoof(const ToySample& live, Medium medium, std::uint64_t seed, int index);

/// Per-medium prior mask of regions that must not be inpainted (value 1).
Tensor<float> preliminary_mask(Medium medium, int n,
                               PartialRegion region = PartialRegion::eye);

/// Balanced dataset: count/2 live followed by count/2 spoof cycling through
/// the four media; spoof i is derived from live i.
std::vector<ToySample> gen_dataset(const ToyConfig& cfg);

/// Protocol splits over a generated dataset. `known` is a stratified 60/40
/// split; `unknown` leaves one medium out of training entirely and tests on
/// it plus 20% of the live data; `open_set` removes one medium from the known
/// training split and tests on the known test set plus every held-out sample.
ProtocolSplit make_splits(const std::vector<ToySample>& samples, ProtocolMode mode,
                          Medium held_out_medium, std::uint64_t seed);

}  // namespace spooftrace
