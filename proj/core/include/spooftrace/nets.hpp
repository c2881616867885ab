#pragma once

#include <array>
#include <random>

#include "spooftrace/nn.hpp"
#include "spooftrace/trace_algebra.hpp"

namespace spooftrace {

struct GeneratorConfig {
  BandConfig band;
  double amp_mid = 15.0;
  double amp_high = 25.0;
  /// Ablation: collapse the decoder to one full-band additive trace with no
  /// band split and no inpainting.
  bool single_trace = false;

  int depth_size() const { return band.N / 8; }
};

template <typename S>
struct GeneratorOutput {
  BasicTraceSet<Var<S>> traces;
  Var<S> depth;               // [B,K,K,1], sigmoid range
  Var<S> f1, f2, f3, u3;      // encoder features and top decoder feature
};

/// Disentanglement generator: a three-stage encoder over the band-decomposed
/// input, a trace decoder with skip connections, and a depth estimation head
/// fed by all scales through a spatial attention gate.
template <typename S>
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, std::mt19937& rng) : cfg_(cfg) {
    cfg_.band.validate();
    const int out_ch = cfg_.single_trace ? 3 : 13;
    enc0_ = ConvBlock<S>(params_, "G.enc0", 3, 9, 64, 1, rng);
    enc1a_ = ConvBlock<S>(params_, "G.enc1a", 3, 64, 64, 2, rng);
    enc1b_ = ConvBlock<S>(params_, "G.enc1b", 3, 64, 64, 1, rng);
    enc2a_ = ConvBlock<S>(params_, "G.enc2a", 3, 64, 96, 2, rng);
    enc2b_ = ConvBlock<S>(params_, "G.enc2b", 3, 96, 96, 1, rng);
    enc3a_ = ConvBlock<S>(params_, "G.enc3a", 3, 96, 128, 2, rng);
    enc3b_ = ConvBlock<S>(params_, "G.enc3b", 3, 128, 128, 1, rng);
    dec1_ = ConvBlock<S>(params_, "G.dec1", 3, 128, 96, 2, rng, true, true, true);
    dec2_ = ConvBlock<S>(params_, "G.dec2", 3, 96 + 96, 64, 2, rng, true, true, true);
    dec3_ = ConvBlock<S>(params_, "G.dec3", 3, 64 + 64, 32, 2, rng, true, true, true);
    out_ = ConvBlock<S>(params_, "G.out", 3, 32, out_ch, 1, rng, false, false);
    att_ = ConvBlock<S>(params_, "G.depth.att", 7, 2, 1, 1, rng, false, false);
    dep0_ = ConvBlock<S>(params_, "G.depth.c0", 1, 64 + 96 + 128 + 32, 64, 1, rng);
    dep1_ = ConvBlock<S>(params_, "G.depth.c1", 3, 64, 64, 1, rng);
    depo_ = ConvBlock<S>(params_, "G.depth.out", 3, 64, 1, 1, rng, false, false);
  }

  const GeneratorConfig& config() const { return cfg_; }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

  std::int64_t encoder_param_count() const { return count_prefixes({"G.enc"}); }
  std::int64_t decoder_param_count() const { return count_prefixes({"G.dec", "G.out"}); }
  std::int64_t depth_head_param_count() const { return count_prefixes({"G.depth"}); }

  /// Builds the 9-channel band-decomposed input for a batch of images.
  Tensor<S> make_input(const Tensor<S>& images) const {
    const Shape4 s = as4(images);
    if (s.h != cfg_.band.N || s.w != cfg_.band.N || s.c != 3)
      throw std::invalid_argument("generator: input must be [B,N,N,3] matching config");
    BandDecomposition<S> dec = decompose(images, cfg_.band);
    dec.amp_mid = static_cast<S>(cfg_.amp_mid);
    dec.amp_high = static_cast<S>(cfg_.amp_high);
    return encoder_input(dec);
  }

  GeneratorOutput<S> forward(const Tensor<S>& images, bool training) {
    return forward_on(Var<S>::constant(make_input(images)), training);
  }

  GeneratorOutput<S> forward_on(const Var<S>& enc_in, bool training) {
    const int bsz = as4(enc_in.val()).b;
    const int k = cfg_.depth_size();

    Var<S> x = enc0_(enc_in, training);
    Var<S> f1 = enc1b_(enc1a_(x, training), training);
    Var<S> f2 = enc2b_(enc2a_(f1, training), training);
    Var<S> f3 = enc3b_(enc3a_(f2, training), training);

    Var<S> d1 = dec1_(f3, training);
    Var<S> d2 = dec2_(concat_channels<S>({d1, f2}), training);
    Var<S> u3 = dec3_(concat_channels<S>({d2, f1}), training);
    Var<S> raw = out_(u3, training);

    GeneratorOutput<S> out;
    out.f1 = f1;
    out.f2 = f2;
    out.f3 = f3;
    out.u3 = u3;
    if (cfg_.single_trace) {
      const int n = cfg_.band.N;
      out.traces.T = tanh_(raw);
      out.traces.B = Var<S>::constant(Tensor<S>::zeros({bsz, n, n, 3}));
      out.traces.C = Var<S>::constant(Tensor<S>::zeros({bsz, n, n, 3}));
      out.traces.P = Var<S>::constant(Tensor<S>::zeros({bsz, n, n, 1}));
      out.traces.I_P = Var<S>::constant(Tensor<S>::zeros({bsz, n, n, 3}));
    } else {
      out.traces.B = tanh_(slice_channels(raw, 0, 3));
      out.traces.C = tanh_(slice_channels(raw, 3, 6));
      out.traces.T = tanh_(slice_channels(raw, 6, 9));
      out.traces.P = sigmoid(slice_channels(raw, 9, 10));
      out.traces.I_P = sigmoid(slice_channels(raw, 10, 13));
    }

    Var<S> feat = concat_channels<S>({resize_bilinear(f1, k, k), resize_bilinear(f2, k, k),
                                      resize_bilinear(f3, k, k), resize_bilinear(u3, k, k)});
    Var<S> gate = sigmoid(att_(concat_channels<S>({channel_mean(feat), channel_max(feat)}),
                               training));
    feat = hadamard(feat, gate);
    out.depth = sigmoid(depo_(dep1_(dep0_(feat, training), training), training));
    return out;
  }

 private:
  std::int64_t count_prefixes(const std::vector<std::string>& prefixes) const {
    std::int64_t n = 0;
    for (const auto& [name, p] : params_.params)
      for (const auto& pre : prefixes)
        if (name.rfind(pre, 0) == 0) {
          n += p.val().size();
          break;
        }
    return n;
  }

  GeneratorConfig cfg_;
  ParamSet<S> params_;
  ConvBlock<S> enc0_, enc1a_, enc1b_, enc2a_, enc2b_, enc3a_, enc3b_;
  ConvBlock<S> dec1_, dec2_, dec3_, out_;
  ConvBlock<S> att_, dep0_, dep1_, depo_;
};

/// Four PatchGAN-style discriminators with identical structure and unshared
/// weights; each resizes its input to a fixed operating resolution and emits
/// a 1-channel decision map in [0,1].
template <typename S>
class DiscriminatorBank {
 public:
  DiscriminatorBank(int image_size, std::mt19937& rng) {
    resolutions_ = {image_size / 8, 3 * image_size / 8, image_size, image_size};
    for (int i = 0; i < 4; ++i) {
      const std::string base = "D" + std::to_string(i + 1);
      d_[i].c0 = ConvBlock<S>(params_, base + ".c0", 3, 3, 32, 2, rng);
      d_[i].c1 = ConvBlock<S>(params_, base + ".c1", 3, 32, 64, 2, rng);
      d_[i].c2 = ConvBlock<S>(params_, base + ".c2", 3, 64, 64, 1, rng);
      d_[i].out = ConvBlock<S>(params_, base + ".out", 3, 64, 1, 1, rng, false, false);
    }
  }

  ParamSet<S>& params() { return params_; }
  const std::array<int, 4>& resolutions() const { return resolutions_; }

  /// scale_id is 1-based (1..4).
  Var<S> discriminate(const Var<S>& img, int scale_id, bool training) {
    if (scale_id < 1 || scale_id > 4)
      throw std::invalid_argument("discriminate: scale_id must be in 1..4");
    auto& d = d_[scale_id - 1];
    const int r = resolutions_[scale_id - 1];
    Var<S> x = resize_bilinear(img, r, r);
    x = d.c2(d.c1(d.c0(x, training), training), training);
    return sigmoid(d.out(x, training));
  }

 private:
  struct Patch {
    ConvBlock<S> c0, c1, c2, out;
  };
  std::array<Patch, 4> d_;
  std::array<int, 4> resolutions_{};
  ParamSet<S> params_;
};

}  // namespace spooftrace
