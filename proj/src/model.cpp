// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/model.hpp"

#include <json.hpp>

namespace srs::model {

namespace {

constexpr std::uint64_t kReconStream = 1;
constexpr std::uint64_t kSegStream = 2;
constexpr std::uint64_t kBridgeStream = 3;

Shape level_shape(const Shape& input, std::int64_t channels, std::int64_t level) {
  return {input[0], channels, input[2] >> level, input[3] >> level};
}

void append_params(nn::StateList<float>& from, std::vector<nn::NamedParam<float>>& to) {
  for (auto& p : from.params) to.push_back(p);
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kPureSeg:
      return "pure_seg";
    case Variant::kDPConvSeg:
      return "dpconv_seg";
    case Variant::kDPConvRecon:
      return "dpconv_recon";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "pure_seg") return Variant::kPureSeg;
  if (name == "dpconv_seg") return Variant::kDPConvSeg;
  if (name == "dpconv_recon") return Variant::kDPConvRecon;
  fail(ErrorKind::kUnknownVariant, "unknown variant '" + std::string(name) +
                                       "' (expected pure_seg, dpconv_seg or dpconv_recon)");
}

void ModelConfig::validate() const {
  require(in_channels > 0, ErrorKind::kInvalidArgument, "in_channels must be positive");
  require(levels >= 2, ErrorKind::kInvalidArgument, "at least two levels are required");
  require(static_cast<std::int64_t>(widths.size()) == levels, ErrorKind::kInvalidArgument,
          "widths must list one channel count per level");
  for (auto w : widths) require(w > 0, ErrorKind::kInvalidArgument, "widths must be positive");
  if (variant != Variant::kPureSeg) dpconv.validate();
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["in_channels"] = in_channels;
  j["levels"] = levels;
  j["widths"] = widths;
  j["variant"] = std::string(to_string(variant));
  j["dpconv"] = {{"c_in", dpconv.c_in},
                 {"c_out", dpconv.c_out},
                 {"k", dpconv.k},
                 {"c_info", dpconv.c_info},
                 {"conv_b_groups", dpconv.conv_b_groups},
                 {"conv_a_bias", dpconv.conv_a_bias},
                 {"conv_b_bias", dpconv.conv_b_bias}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("model config is not valid JSON: ") + e.what());
  }
  ModelConfig c;
  try {
    c.in_channels = j.value("in_channels", c.in_channels);
    c.levels = j.value("levels", c.levels);
    c.widths = j.value("widths", c.widths);
    if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("dpconv")) {
      const auto& d = j.at("dpconv");
      c.dpconv.c_in = d.value("c_in", c.dpconv.c_in);
      c.dpconv.c_out = d.value("c_out", c.dpconv.c_out);
      c.dpconv.k = d.value("k", c.dpconv.k);
      c.dpconv.c_info = d.value("c_info", c.dpconv.c_info);
      c.dpconv.conv_b_groups = d.value("conv_b_groups", c.dpconv.conv_b_groups);
      c.dpconv.conv_a_bias = d.value("conv_a_bias", c.dpconv.conv_a_bias);
      c.dpconv.conv_b_bias = d.value("conv_b_bias", c.dpconv.conv_b_bias);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad model config field: ") + e.what());
  }
  c.validate();
  return c;
}

EncoderStack::EncoderStack(std::int64_t in_channels, const std::vector<std::int64_t>& widths, Rng& rng) {
  std::int64_t c = in_channels;
  for (auto w : widths) {
    blocks.emplace_back(c, w, rng);
    c = w;
  }
}

std::vector<FVar> EncoderStack::forward(const FVar& x) {
  std::vector<FVar> feats;
  feats.reserve(blocks.size());
  FVar h = x;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) h = nn::downsample(h);
    h = blocks[i].forward(h);
    feats.push_back(h);
  }
  return feats;
}

void EncoderStack::collect(const std::string& prefix, nn::StateList<float>& out) {
  for (std::size_t i = 0; i < blocks.size(); ++i) blocks[i].collect(prefix + ".block" + std::to_string(i), out);
}

void EncoderStack::set_training(bool training) {
  for (auto& b : blocks) b.set_training(training);
}

std::int64_t EncoderStack::param_count() const {
  std::int64_t n = 0;
  for (const auto& b : blocks) n += b.param_count();
  return n;
}

std::int64_t EncoderStack::flops(const Shape& input) const {
  std::int64_t f = 0;
  Shape s = input;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i > 0) {
      f += nn::max_pool_flops(s);
      s = {s[0], s[1], s[2] / 2, s[3] / 2};
    }
    f += blocks[i].flops(s);
    s = {s[0], blocks[i].out_channels(), s[2], s[3]};
  }
  return f;
}

NestedDecoder::NestedDecoder(const std::vector<std::int64_t>& widths, std::int64_t out_channels, Rng& rng)
    : widths_(widths) {
  const auto levels = static_cast<std::int64_t>(widths.size());
  nodes.resize(levels);
  for (std::int64_t j = 1; j < levels; ++j) {
    for (std::int64_t i = 0; i + j < levels; ++i) {
      const std::int64_t in = j * widths[i] + widths[i + 1];
      nodes[i].emplace_back(in, widths[i], rng);
    }
  }
  head = nn::Conv2d<float>({widths[0], out_channels, 1, 1, 0, 1, true}, rng);
}

FVar NestedDecoder::forward(const std::vector<FVar>& encoder_features) {
  const auto levels = widths_.size();
  require(encoder_features.size() == levels, ErrorKind::kShapeMismatch, "decoder expects one feature per level");
  std::vector<std::vector<FVar>> grid(levels);
  for (std::size_t i = 0; i < levels; ++i) grid[i].push_back(encoder_features[i]);
  for (std::size_t j = 1; j < levels; ++j) {
    for (std::size_t i = 0; i + j < levels; ++i) {
      std::vector<FVar> parts(grid[i].begin(), grid[i].begin() + j);
      parts.push_back(nn::upsample(grid[i + 1][j - 1]));
      grid[i].push_back(nodes[i][j - 1].forward(ops::concat_channels(parts)));
    }
  }
  return head.forward(grid[0][levels - 1]);
}

void NestedDecoder::collect(const std::string& prefix, nn::StateList<float>& out) {
  for (std::size_t j = 1; j < widths_.size(); ++j) {
    for (std::size_t i = 0; i + j < widths_.size(); ++i) {
      nodes[i][j - 1].collect(prefix + ".x" + std::to_string(i) + std::to_string(j), out);
    }
  }
  head.collect(prefix + ".head", out);
}

void NestedDecoder::set_training(bool training) {
  for (auto& row : nodes) {
    for (auto& b : row) b.set_training(training);
  }
}

std::int64_t NestedDecoder::param_count() const {
  std::int64_t n = head.param_count();
  for (const auto& row : nodes) {
    for (const auto& b : row) n += b.param_count();
  }
  return n;
}

std::int64_t NestedDecoder::flops(const Shape& input) const {
  std::int64_t f = 0;
  const auto levels = static_cast<std::int64_t>(widths_.size());
  for (std::int64_t j = 1; j < levels; ++j) {
    for (std::int64_t i = 0; i + j < levels; ++i) {
      f += nn::upsample_flops(level_shape(input, widths_[i + 1], i + 1));
      f += nodes[i][j - 1].flops(level_shape(input, j * widths_[i] + widths_[i + 1], i));
    }
  }
  return f + head.flops(level_shape(input, widths_[0], 0));
}

SRSModel::SRSModel(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const Rng root(seed);
  if (config_.variant == Variant::kDPConvRecon) {
    Rng rng = root.fork(kReconStream);
    recon_encoder_.emplace(config_.in_channels, config_.widths, rng);
    recon_decoder_.emplace(config_.widths, config_.in_channels, rng);
  }
  {
    Rng rng = root.fork(kSegStream);
    seg_encoder_ = EncoderStack(config_.in_channels, config_.widths, rng);
    seg_decoder_ = NestedDecoder(config_.widths, 1, rng);
  }
  if (config_.variant != Variant::kPureSeg) {
    Rng rng = root.fork(kBridgeStream);
    const auto& d = config_.dpconv;
    const std::int64_t deep = config_.widths.back();
    Bridge b;
    b.proj_info = nn::Conv2d<float>({deep, d.c_info, 1, 1, 0, 1, true}, rng);
    b.proj_in = nn::Conv2d<float>({deep, d.c_in, 1, 1, 0, 1, true}, rng);
    b.generator = dpconv::GeneratorNet<float>(d, rng);
    b.proj_out = nn::Conv2d<float>({d.c_out, deep, 1, 1, 0, 1, true}, rng);
    b.proj_out.weight.mutable_value().fill(0.0f);
    b.proj_out.bias.mutable_value().fill(0.0f);
    bridge_ = std::move(b);
  }
}

void SRSModel::check_input(const FVar& image) const {
  require(image.defined() && image.value().rank() == 4, ErrorKind::kShapeMismatch, "model input must be (B,C,H,W)");
  require(image.dim(1) == config_.in_channels, ErrorKind::kShapeMismatch,
          "model expects " + std::to_string(config_.in_channels) + " channels, got " + shape_str(image.shape()));
  const std::int64_t m = config_.spatial_multiple();
  require(image.dim(2) % m == 0 && image.dim(3) % m == 0, ErrorKind::kSpatialDivisibility,
          "input " + shape_str(image.shape()) + " is not divisible by 2^(levels-1) = " + std::to_string(m));
}

Shape SRSModel::bottleneck_shape(const Shape& input) const {
  return level_shape(input, config_.widths.back(), config_.levels - 1);
}

SRSModel::ReconOutput SRSModel::recon_forward(const FVar& image) {
  require(has_reconstruction() && has_reconstruction_decoder(), ErrorKind::kInvalidArgument,
          "this model has no reconstruction decoder");
  check_input(image);
  auto feats = recon_encoder_->forward(image);
  ReconOutput out;
  out.f_r = feats.back();
  out.recon = recon_decoder_->forward(feats);
  return out;
}

SRSModel::SegOutput SRSModel::seg_forward(const FVar& image) {
  check_input(image);
  auto feats = seg_encoder_.forward(image);
  SegOutput out;
  out.f_s = feats.back();
  out.bottleneck = out.f_s;
  if (bridge_) {
    FVar informative = out.f_s;
    if (config_.variant == Variant::kDPConvRecon) informative = recon_encoder_->forward(image).back();
    out.dpconv = dpconv::dpconv_forward(bridge_->proj_in.forward(out.f_s), bridge_->proj_info.forward(informative),
                                        bridge_->generator);
    out.bottleneck = ops::add(out.f_s, bridge_->proj_out.forward(out.dpconv));
  }
  feats.back() = out.bottleneck;
  out.logits = seg_decoder_.forward(feats);
  return out;
}

void SRSModel::freeze_reconstruction_encoder() {
  if (!recon_encoder_) return;
  nn::StateList<float> s;
  recon_encoder_->collect("recon_encoder", s);
  for (auto& p : s.params) {
    p.var.set_requires_grad(false);
    freeze_mask_.insert(p.name);
  }
  recon_encoder_->set_training(false);
  recon_frozen_ = true;
}

void SRSModel::set_training(bool training) {
  training_ = training;
  if (recon_encoder_) recon_encoder_->set_training(training && !recon_frozen_);
  if (recon_decoder_) recon_decoder_->set_training(training);
  seg_encoder_.set_training(training);
  seg_decoder_.set_training(training);
}

nn::StateList<float> SRSModel::state() {
  nn::StateList<float> s;
  if (recon_encoder_) recon_encoder_->collect("recon_encoder", s);
  if (recon_decoder_) recon_decoder_->collect("recon_decoder", s);
  seg_encoder_.collect("seg_encoder", s);
  seg_decoder_.collect("seg_decoder", s);
  if (bridge_) {
    bridge_->proj_info.collect("bridge.proj_info", s);
    bridge_->proj_in.collect("bridge.proj_in", s);
    bridge_->generator.collect("bridge.generator", s);
    bridge_->proj_out.collect("bridge.proj_out", s);
  }
  return s;
}

std::vector<nn::NamedParam<float>> SRSModel::phase_one_parameters() {
  require(has_reconstruction_decoder(), ErrorKind::kInvalidArgument, "phase one needs the reconstruction network");
  std::vector<nn::NamedParam<float>> out;
  nn::StateList<float> s;
  recon_encoder_->collect("recon_encoder", s);
  recon_decoder_->collect("recon_decoder", s);
  append_params(s, out);
  return out;
}

std::vector<nn::NamedParam<float>> SRSModel::phase_two_parameters() {
  std::vector<nn::NamedParam<float>> out;
  for (auto& p : state().params) {
    if (p.name.rfind("recon_decoder.", 0) == 0) continue;
    if (freeze_mask_.count(p.name) != 0) continue;
    out.push_back(p);
  }
  return out;
}

std::int64_t SRSModel::param_count() { return state().param_count(); }

std::int64_t SRSModel::bridge_param_count() const {
  if (!bridge_) return 0;
  return bridge_->proj_info.param_count() + bridge_->proj_in.param_count() + bridge_->generator.param_count() +
         bridge_->proj_out.param_count();
}

std::int64_t SRSModel::segmentation_param_count() const {
  return seg_encoder_.param_count() + seg_decoder_.param_count();
}

std::int64_t SRSModel::bridge_flops(const Shape& input) const {
  if (!bridge_) return 0;
  const Shape deep = bottleneck_shape(input);
  const auto& d = config_.dpconv;
  const Shape info{deep[0], d.c_info, deep[2], deep[3]};
  const Shape dyn_out{deep[0], d.c_out, deep[2], deep[3]};
  std::int64_t f = bridge_->proj_info.flops(deep) + bridge_->proj_in.flops(deep) + bridge_->generator.flops(info);
  f += 2 * d.c_in * d.k * d.k * d.c_out * deep[2] * deep[3];
  f += bridge_->proj_out.flops(dyn_out) + deep[1] * deep[2] * deep[3];
  return f;
}

std::int64_t SRSModel::reconstruction_flops(const Shape& input) const {
  return recon_encoder_ ? recon_encoder_->flops(input) : 0;
}

std::int64_t SRSModel::flops(const Shape& input) const {
  return reconstruction_flops(input) + bridge_flops(input) + seg_encoder_.flops(input) + seg_decoder_.flops(input);
}

SRSModel build_ablation(Variant variant, ModelConfig base, std::uint64_t seed) {
  base.variant = variant;
  return SRSModel(base, seed);
}

SRSModel build_ablation(std::string_view variant, ModelConfig base, std::uint64_t seed) {
  return build_ablation(parse_variant(variant), std::move(base), seed);
}

std::int64_t count_model_params(SRSModel& model) { return model.param_count(); }

std::int64_t count_flops(const SRSModel& model, const Shape& input) { return model.flops(input); }

}  // namespace srs::model
