// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Siamese reconstruction-segmentation network. Two structurally identical
// nested-U networks (ResBlock encoders, dense-nested decoders); the deepest
// feature of the reconstruction encoder drives the DPConv kernel generator,
// whose kernels convolve the deepest segmentation feature. The result is added
// back onto that feature before the segmentation decoder.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "srs/dpconv.hpp"
#include "srs/layers.hpp"

namespace srs::model {

using FVar = Var<float>;

enum class Variant {
  kPureSeg,      // segmentation network alone, no bridge
  kDPConvSeg,    // DPConv kernels generated from the segmentation encoder
  kDPConvRecon,  // full SRS: kernels generated from the reconstruction encoder
};

std::string_view to_string(Variant v);
/// Accepts "pure_seg", "dpconv_seg", "dpconv_recon"; throws UnknownVariant.
Variant parse_variant(std::string_view name);

struct ModelConfig {
  std::int64_t in_channels = 1;
  std::int64_t levels = 4;
  std::vector<std::int64_t> widths{16, 32, 64, 128};
  dpconv::DPConvConfig dpconv;
  Variant variant = Variant::kDPConvRecon;

  void validate() const;
  /// Input H and W must be multiples of this.
  std::int64_t spatial_multiple() const { return std::int64_t{1} << (levels - 1); }
  std::string to_json() const;
  static ModelConfig from_json(std::string_view json);
  bool operator==(const ModelConfig&) const = default;
};

/// Level i: ResBlock on the input (i = 0) or on the 2x2-pooled previous level.
/// Returns the features x^{i,0} for i = 0 .. L-1.
class EncoderStack {
 public:
  EncoderStack() = default;
  EncoderStack(std::int64_t in_channels, const std::vector<std::int64_t>& widths, Rng& rng);

  std::vector<FVar> forward(const FVar& x);
  void collect(const std::string& prefix, nn::StateList<float>& out);
  void set_training(bool training);
  std::int64_t param_count() const;
  std::int64_t flops(const Shape& input) const;

  std::vector<nn::ResBlock<float>> blocks;
};

/// Dense-nested decoder: node x^{i,j} (j >= 1) is a ResBlock over
/// concat(x^{i,0}, ..., x^{i,j-1}, up(x^{i+1,j-1})). A 1x1 head maps x^{0,L-1}
/// to the output channels.
class NestedDecoder {
 public:
  NestedDecoder() = default;
  NestedDecoder(const std::vector<std::int64_t>& widths, std::int64_t out_channels, Rng& rng);

  FVar forward(const std::vector<FVar>& encoder_features);
  void collect(const std::string& prefix, nn::StateList<float>& out);
  void set_training(bool training);
  std::int64_t param_count() const;
  std::int64_t flops(const Shape& input) const;

  // nodes[i][j - 1] is x^{i,j}.
  std::vector<std::vector<nn::ResBlock<float>>> nodes;
  nn::Conv2d<float> head;

 private:
  std::vector<std::int64_t> widths_;
};

struct Bridge {
  nn::Conv2d<float> proj_info;  // bottleneck -> c_info
  nn::Conv2d<float> proj_in;    // bottleneck -> c_in
  dpconv::GeneratorNet<float> generator;
  nn::Conv2d<float> proj_out;   // c_out -> bottleneck, zero-initialized
};

class SRSModel {
 public:
  /// Sub-networks draw their initial weights from separate streams of `seed`,
  /// so the segmentation branch starts identical across variants.
  SRSModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  Variant variant() const { return config_.variant; }

  struct ReconOutput {
    FVar recon;  // (B, C, H, W)
    FVar f_r;    // deepest reconstruction-encoder feature
  };
  ReconOutput recon_forward(const FVar& image);

  struct SegOutput {
    FVar logits;      // (B, 1, H, W)
    FVar f_s;         // deepest segmentation-encoder feature
    FVar bottleneck;  // what the decoder sees at the deepest level
    FVar dpconv;      // raw DPConv output (undefined for pure_seg)
  };
  SegOutput seg_forward(const FVar& image);

  bool has_reconstruction() const { return recon_encoder_.has_value(); }
  bool has_reconstruction_decoder() const { return recon_decoder_.has_value(); }
  bool has_bridge() const { return bridge_.has_value(); }
  /// Phase two has no use for the reconstruction decoder.
  void drop_reconstruction_decoder() { recon_decoder_.reset(); }

  /// Excludes every reconstruction-encoder parameter from optimization and
  /// pins its normalization layers to their running statistics.
  void freeze_reconstruction_encoder();
  bool reconstruction_frozen() const { return recon_frozen_; }
  const std::set<std::string>& freeze_mask() const { return freeze_mask_; }

  void set_training(bool training);
  bool training() const { return training_; }

  /// Every parameter and buffer, in a fixed order.
  nn::StateList<float> state();
  /// Parameters optimized in phase one: reconstruction encoder and decoder.
  std::vector<nn::NamedParam<float>> phase_one_parameters();
  /// Parameters optimized in phase two: everything outside the freeze mask
  /// except the reconstruction decoder.
  std::vector<nn::NamedParam<float>> phase_two_parameters();

  std::int64_t param_count();
  std::int64_t bridge_param_count() const;
  std::int64_t segmentation_param_count() const;

  /// Per-sample FLOPs of the phase-two inference path (reconstruction encoder,
  /// bridge, segmentation network) for an input of shape (B, C, H, W).
  std::int64_t flops(const Shape& input) const;
  std::int64_t bridge_flops(const Shape& input) const;
  std::int64_t reconstruction_flops(const Shape& input) const;

  EncoderStack& recon_encoder() { return *recon_encoder_; }
  EncoderStack& seg_encoder() { return seg_encoder_; }
  Bridge& bridge() { return *bridge_; }

 private:
  void check_input(const FVar& image) const;
  Shape bottleneck_shape(const Shape& input) const;

  ModelConfig config_;
  std::optional<EncoderStack> recon_encoder_;
  std::optional<NestedDecoder> recon_decoder_;
  EncoderStack seg_encoder_;
  NestedDecoder seg_decoder_;
  std::optional<Bridge> bridge_;
  std::set<std::string> freeze_mask_;
  bool recon_frozen_ = false;
  bool training_ = true;
};

/// The three ablation topologies on a shared base configuration.
SRSModel build_ablation(Variant variant, ModelConfig base, std::uint64_t seed);
SRSModel build_ablation(std::string_view variant, ModelConfig base, std::uint64_t seed);

/// Sum of learnable tensor sizes.
std::int64_t count_model_params(SRSModel& model);
std::int64_t count_flops(const SRSModel& model, const Shape& input);

}  // namespace srs::model
