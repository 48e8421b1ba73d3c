// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "srs/metrics.hpp"

namespace srs::train {

namespace {

constexpr std::uint64_t kPhaseOneStream = 101;
constexpr std::uint64_t kPhaseTwoStream = 102;
constexpr const char* kVelocityPrefix = "optim.momentum/";

std::vector<std::size_t> shuffled(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

// Samples of one minibatch, augmented when requested.
data::Batch next_batch(const data::Dataset& ds, const std::vector<std::size_t>& order, std::size_t start,
                       std::size_t batch_size, bool augment, Rng& rng) {
  data::Dataset picked;
  for (std::size_t i = start; i < std::min(order.size(), start + batch_size); ++i) {
    const data::Sample& s = ds.samples[order[i]];
    picked.samples.push_back(augment ? data::augment(s, rng) : s);
  }
  std::vector<std::size_t> idx(picked.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return data::make_batch(picked, idx);
}

void zero_grads(const std::vector<nn::NamedParam<float>>& params) {
  for (const auto& p : params) {
    auto& node = *p.var.node();
    node.grad = Tensor();
  }
}

void write_log(const PhaseOptions& options, const std::vector<EpochLog>& log) {
  if (options.log_path.empty()) return;
  std::ofstream out(options.log_path, std::ios::trunc);
  require(out.good(), ErrorKind::kIoError, "cannot write metrics log " + options.log_path);
  out << metrics_csv(log);
}

nlohmann::json config_document(const Checkpoint& ckpt) {
  try {
    return nlohmann::json::parse(ckpt.config);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, std::string("checkpoint config is not valid JSON: ") + e.what());
  }
}

void copy_tensor(const std::string& name, const Tensor& src, Tensor& dst) {
  require(src.shape() == dst.shape(), ErrorKind::kCheckpointMismatch,
          "checkpoint tensor " + name + " has shape " + shape_str(src.shape()) + ", model expects " +
              shape_str(dst.shape()));
  dst = src;
}

template <typename T>
void check_same(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* what) {
  require(a.shape() == b.shape(), ErrorKind::kShapeMismatch,
          std::string(what) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace

std::string_view to_string(ReconMode m) { return m == ReconMode::kDirect ? "direct" : "masked"; }

ReconMode parse_recon_mode(std::string_view name) {
  if (name == "direct") return ReconMode::kDirect;
  if (name == "masked") return ReconMode::kMasked;
  fail(ErrorKind::kInvalidArgument, "unknown reconstruction mode '" + std::string(name) + "' (expected direct or masked)");
}

void TrainConfig::validate() const {
  require(lr0 > 0.0 && std::isfinite(lr0), ErrorKind::kInvalidArgument, "lr0 must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorKind::kInvalidArgument, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, ErrorKind::kInvalidArgument, "weight decay must be non-negative");
  require(batch_size > 0, ErrorKind::kInvalidArgument, "batch size must be positive");
  require(epochs_recon > 0 && epochs_seg > 0, ErrorKind::kInvalidArgument, "epoch counts must be positive");
  require(mask_patch > 0, ErrorKind::kInvalidArgument, "mask patch must be positive");
  require(mask_ratio > 0.0 && mask_ratio < 1.0, ErrorKind::kInvalidArgument, "mask ratio must lie in (0, 1)");
}

std::string TrainConfig::to_json() const {
  nlohmann::json j{{"lr0", lr0},
                   {"momentum", momentum},
                   {"weight_decay", weight_decay},
                   {"batch_size", batch_size},
                   {"epochs_recon", epochs_recon},
                   {"epochs_seg", epochs_seg},
                   {"seed", seed},
                   {"recon_mode", std::string(to_string(recon_mode))},
                   {"freeze", freeze},
                   {"mask_patch", mask_patch},
                   {"mask_ratio", mask_ratio},
                   {"augment", augment}};
  return j.dump();
}

TrainConfig TrainConfig::from_json(std::string_view text) {
  TrainConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.lr0 = j.value("lr0", c.lr0);
    c.momentum = j.value("momentum", c.momentum);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs_recon = j.value("epochs_recon", c.epochs_recon);
    c.epochs_seg = j.value("epochs_seg", c.epochs_seg);
    c.seed = j.value("seed", c.seed);
    if (j.contains("recon_mode")) c.recon_mode = parse_recon_mode(j.at("recon_mode").get<std::string>());
    c.freeze = j.value("freeze", c.freeze);
    c.mask_patch = j.value("mask_patch", c.mask_patch);
    c.mask_ratio = j.value("mask_ratio", c.mask_ratio);
    c.augment = j.value("augment", c.augment);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kInvalidArgument, std::string("bad training config: ") + e.what());
  }
  c.validate();
  return c;
}

template <typename T>
Var<T> loss_recon(const Var<T>& recon, const BasicTensor<T>& target) {
  check_same(recon.value(), target, "loss_recon");
  const auto n = recon.numel();
  const std::int64_t batch = recon.dim(0);
  const std::int64_t per = n / batch;
  double total = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    double s = 0.0;
    for (std::int64_t i = b * per; i < (b + 1) * per; ++i) {
      const double d = static_cast<double>(recon.value()[i]) - static_cast<double>(target[i]);
      s += d * d;
    }
    total += s / static_cast<double>(per);
  }
  const double value = total / (2.0 * static_cast<double>(batch));
  return make_result<T>(BasicTensor<T>({1}, static_cast<T>(value)), {recon}, [target, batch, per](Node<T>& self) {
    const auto& x = self.parents[0]->value;
    BasicTensor<T> g(x.shape());
    const double c = static_cast<double>(self.grad[0]) / (static_cast<double>(batch) * static_cast<double>(per));
    for (std::int64_t i = 0; i < g.numel(); ++i) {
      g[i] = static_cast<T>(c * (static_cast<double>(x[i]) - static_cast<double>(target[i])));
    }
    self.parents[0]->accumulate(g);
  });
}

template <typename T>
Var<T> loss_recon_masked(const Var<T>& recon, const BasicTensor<T>& target, const BasicTensor<T>& mask) {
  check_same(recon.value(), target, "loss_recon_masked");
  require(recon.value().rank() == 4 && mask.shape() == Shape{recon.dim(0), 1, recon.dim(2), recon.dim(3)},
          ErrorKind::kShapeMismatch, "reconstruction mask must be (B,1,H,W)");
  const std::int64_t batch = recon.dim(0), ch = recon.dim(1), plane = recon.dim(2) * recon.dim(3);
  std::vector<double> weight(static_cast<std::size_t>(batch), 0.0);
  double total = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    double count = 0.0;
    for (std::int64_t i = 0; i < plane; ++i) count += static_cast<double>(mask[b * plane + i]);
    if (count == 0.0) continue;
    weight[b] = 1.0 / (count * static_cast<double>(ch));
    double s = 0.0;
    for (std::int64_t c = 0; c < ch; ++c) {
      for (std::int64_t i = 0; i < plane; ++i) {
        const std::int64_t k = (b * ch + c) * plane + i;
        const double d = static_cast<double>(recon.value()[k]) - static_cast<double>(target[k]);
        s += static_cast<double>(mask[b * plane + i]) * d * d;
      }
    }
    total += s * weight[b];
  }
  const double value = total / (2.0 * static_cast<double>(batch));
  return make_result<T>(BasicTensor<T>({1}, static_cast<T>(value)), {recon},
                        [target, mask, weight, batch, ch, plane](Node<T>& self) {
                          const auto& x = self.parents[0]->value;
                          BasicTensor<T> g(x.shape());
                          const double up = static_cast<double>(self.grad[0]) / static_cast<double>(batch);
                          for (std::int64_t b = 0; b < batch; ++b) {
                            for (std::int64_t c = 0; c < ch; ++c) {
                              for (std::int64_t i = 0; i < plane; ++i) {
                                const std::int64_t k = (b * ch + c) * plane + i;
                                const double d = static_cast<double>(x[k]) - static_cast<double>(target[k]);
                                g[k] = static_cast<T>(up * weight[b] * static_cast<double>(mask[b * plane + i]) * d);
                              }
                            }
                          }
                          self.parents[0]->accumulate(g);
                        });
}

template <typename T>
Var<T> loss_seg(const Var<T>& logits, const BasicTensor<T>& target, double eps) {
  check_same(logits.value(), target, "loss_seg");
  for (T v : target.data()) {
    require(v == T(0) || v == T(1), ErrorKind::kNonBinaryTarget, "segmentation target must contain only 0 and 1");
  }
  const std::int64_t n = logits.numel(), batch = logits.dim(0), per = n / batch;
  std::vector<double> prob(static_cast<std::size_t>(n));
  double bce = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(logits.value()[i]), s = static_cast<double>(target[i]);
    bce += std::max(x, 0.0) - x * s + std::log1p(std::exp(-std::abs(x)));
    prob[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  bce /= static_cast<double>(n);
  std::vector<double> inter(static_cast<std::size_t>(batch)), denom(static_cast<std::size_t>(batch));
  double dice = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    double in = 0.0, ps = 0.0, ss = 0.0;
    for (std::int64_t i = b * per; i < (b + 1) * per; ++i) {
      in += prob[i] * static_cast<double>(target[i]);
      ps += prob[i];
      ss += static_cast<double>(target[i]);
    }
    inter[b] = 2.0 * in + eps;
    denom[b] = ps + ss + eps;
    dice += 1.0 - inter[b] / denom[b];
  }
  dice /= static_cast<double>(batch);
  const double value = 0.5 * bce + dice;
  return make_result<T>(
      BasicTensor<T>({1}, static_cast<T>(value)), {logits},
      [target, prob = std::move(prob), inter, denom, n, batch, per](Node<T>& self) {
        BasicTensor<T> g(self.parents[0]->value.shape());
        const double up = static_cast<double>(self.grad[0]);
        for (std::int64_t b = 0; b < batch; ++b) {
          const double dd = denom[b] * denom[b];
          for (std::int64_t i = b * per; i < (b + 1) * per; ++i) {
            const double s = static_cast<double>(target[i]), p = prob[i];
            const double d_bce = 0.5 * (p - s) / static_cast<double>(n);
            const double d_dice_dp = -(2.0 * s * denom[b] - inter[b]) / dd / static_cast<double>(batch);
            g[i] = static_cast<T>(up * (d_bce + d_dice_dp * p * (1.0 - p)));
          }
        }
        self.parents[0]->accumulate(g);
      });
}

double lr_at(std::int64_t epoch, const TrainConfig& cfg, std::int64_t max_epoch) {
  require(max_epoch > 0 && epoch >= 0 && epoch <= max_epoch, ErrorKind::kEpochOutOfRange,
          "epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(max_epoch) + "]");
  const double frac = 1.0 - static_cast<double>(epoch) / static_cast<double>(max_epoch);
  return cfg.lr0 * std::pow(frac, 0.9);
}

template <typename T>
void sgd_update(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicTensor<T>& velocity, double lr,
                double momentum, double weight_decay) {
  check_same(param, grad, "sgd gradient");
  check_same(param, velocity, "sgd velocity");
  const T m = static_cast<T>(momentum), wd = static_cast<T>(weight_decay), step = static_cast<T>(lr);
  T* p = param.ptr();
  T* v = velocity.ptr();
  const T* g = grad.ptr();
  for (std::int64_t i = 0; i < param.numel(); ++i) {
    v[i] = m * v[i] + (g[i] + wd * p[i]);
    p[i] -= step * v[i];
  }
}

void SgdOptimizer::step(const std::vector<nn::NamedParam<float>>& params, double lr) {
  for (const auto& np : params) {
    auto& node = *np.var.node();
    auto it = velocity_.find(np.name);
    if (it == velocity_.end()) it = velocity_.emplace(np.name, Tensor::zeros(node.value.shape())).first;
    const Tensor grad = node.grad.defined() ? node.grad : Tensor::zeros(node.value.shape());
    sgd_update(node.value, grad, it->second, lr, momentum_, weight_decay_);
  }
}

MaskedBatch masked_reconstruction_batch(const Tensor& images, Rng& rng, std::int64_t patch, double ratio) {
  require(images.rank() == 4, ErrorKind::kShapeMismatch, "masking expects (B,C,H,W)");
  require(ratio > 0.0 && ratio < 1.0, ErrorKind::kInvalidArgument, "mask ratio must lie in (0, 1)");
  require(patch > 0, ErrorKind::kInvalidArgument, "patch must be positive");
  const std::int64_t b = images.dim(0), c = images.dim(1), h = images.dim(2), w = images.dim(3);
  require(h % patch == 0 && w % patch == 0, ErrorKind::kDivisibilityError,
          "image " + std::to_string(h) + "x" + std::to_string(w) + " is not divisible by patch " + std::to_string(patch));
  const std::int64_t th = h / patch, tw = w / patch, tiles = th * tw;
  const auto masked = static_cast<std::int64_t>(std::lround(ratio * static_cast<double>(tiles)));
  require(masked >= 1, ErrorKind::kInvalidArgument, "mask ratio selects no tile");
  MaskedBatch out{images, Tensor::zeros({b, 1, h, w})};
  for (std::int64_t n = 0; n < b; ++n) {
    const auto order = shuffled(static_cast<std::size_t>(tiles), rng);
    for (std::int64_t t = 0; t < masked; ++t) {
      const auto tile = static_cast<std::int64_t>(order[static_cast<std::size_t>(t)]);
      const std::int64_t y0 = (tile / tw) * patch, x0 = (tile % tw) * patch;
      for (std::int64_t y = y0; y < y0 + patch; ++y) {
        for (std::int64_t x = x0; x < x0 + patch; ++x) {
          out.mask.at(n, 0, y, x) = 1.0f;
          for (std::int64_t ch = 0; ch < c; ++ch) out.images.at(n, ch, y, x) = 0.0f;
        }
      }
    }
  }
  return out;
}

std::string metrics_csv(const std::vector<EpochLog>& log, bool include_wall_time) {
  std::ostringstream os;
  os.precision(9);
  os << "epoch,lr,train_loss,val_iou,val_f1,val_dice,wall_seconds\n";
  auto opt = [&](double v) {
    if (v >= 0.0) os << v;
  };
  for (const auto& e : log) {
    os << e.epoch << ',' << e.lr << ',' << e.train_loss << ',';
    opt(e.val_iou);
    os << ',';
    opt(e.val_f1);
    os << ',';
    opt(e.val_dice);
    os << ',';
    if (include_wall_time) os << e.wall_seconds;
    os << '\n';
  }
  return os.str();
}

TrainResult train_phase_one(model::SRSModel& model, const data::Dataset& dataset, const TrainConfig& cfg,
                            const PhaseOptions& options) {
  cfg.validate();
  require(!dataset.empty(), ErrorKind::kEmptyDataset, "phase one needs at least one image");
  const auto params = model.phase_one_parameters();
  for (const auto& p : params) p.var.node()->requires_grad = true;
  model.set_training(true);
  SgdOptimizer optimizer(cfg.momentum, cfg.weight_decay);
  Rng rng(cfg.seed, kPhaseOneStream);
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::int64_t epoch = 0; epoch < cfg.epochs_recon; ++epoch) {
    const double lr = lr_at(epoch, cfg, cfg.epochs_recon);
    const auto order = shuffled(dataset.size(), rng);
    double loss_sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const data::Batch batch = next_batch(dataset, order, s, bs, cfg.augment, rng);
      zero_grads(params);
      Var<float> loss;
      if (cfg.recon_mode == ReconMode::kMasked) {
        const MaskedBatch mb = masked_reconstruction_batch(batch.images, rng, cfg.mask_patch, cfg.mask_ratio);
        loss = loss_recon_masked(model.recon_forward(model::FVar(mb.images)).recon, batch.images, mb.mask);
      } else {
        loss = loss_recon(model.recon_forward(model::FVar(batch.images)).recon, batch.images);
      }
      backward(loss);
      optimizer.step(params, lr);
      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(batch.images.dim(0));
    }
    EpochLog e;
    e.epoch = epoch + 1;
    e.lr = lr;
    e.train_loss = loss_sum / static_cast<double>(dataset.size());
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(e);
    write_log(options, result.log);
    if (options.on_epoch) options.on_epoch(e);
  }
  zero_grads(params);
  result.checkpoint = make_checkpoint(model, &optimizer, {"recon", cfg.epochs_recon, rng.state(), cfg});
  return result;
}

TrainResult train_phase_two(model::SRSModel& model, const data::Dataset& dataset, const Checkpoint* phase_one,
                            const TrainConfig& cfg, const PhaseOptions& options) {
  cfg.validate();
  require(!dataset.empty(), ErrorKind::kEmptyDataset, "phase two needs at least one labeled image");
  require(dataset.labeled(), ErrorKind::kMissingMask, "phase two needs a mask for every image");
  if (model.variant() == model::Variant::kDPConvRecon) {
    require(phase_one != nullptr, ErrorKind::kMissingPhaseOneWeights,
            "dpconv_recon needs a phase-one checkpoint for its reconstruction encoder");
    load_reconstruction_encoder(model, *phase_one);
  }
  if (model.has_reconstruction_decoder()) model.drop_reconstruction_decoder();
  if (cfg.freeze) model.freeze_reconstruction_encoder();
  const auto params = model.phase_two_parameters();
  model.set_training(true);
  SgdOptimizer optimizer(cfg.momentum, cfg.weight_decay);
  Rng rng(cfg.seed, kPhaseTwoStream);
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::int64_t epoch = 0; epoch < cfg.epochs_seg; ++epoch) {
    const double lr = lr_at(epoch, cfg, cfg.epochs_seg);
    const auto order = shuffled(dataset.size(), rng);
    double loss_sum = 0.0, iou_sum = 0.0;
    for (std::size_t s = 0; s < order.size(); s += bs) {
      const data::Batch batch = next_batch(dataset, order, s, bs, cfg.augment, rng);
      zero_grads(params);
      const auto out = model.seg_forward(model::FVar(batch.images));
      Var<float> loss = loss_seg(out.logits, batch.masks);
      backward(loss);
      optimizer.step(params, lr);
      const std::int64_t b = batch.images.dim(0);
      loss_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(b);
      const Tensor pred = metrics::binarize_logits(out.logits.value());
      for (std::int64_t k = 0; k < b; ++k) iou_sum += metrics::iou(batch_item(pred, k), batch_item(batch.masks, k));
    }
    EpochLog e;
    e.epoch = epoch + 1;
    e.lr = lr;
    e.train_loss = loss_sum / static_cast<double>(dataset.size());
    e.train_iou = iou_sum / static_cast<double>(dataset.size());
    if (options.validation != nullptr) {
      const auto report = metrics::evaluate(model, *options.validation);
      e.val_iou = report.mean_iou;
      e.val_f1 = report.mean_f1;
      e.val_dice = report.mean_dice;
    }
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(e);
    write_log(options, result.log);
    if (options.on_epoch) options.on_epoch(e);
  }
  zero_grads(params);
  result.checkpoint = make_checkpoint(model, &optimizer, {"seg", cfg.epochs_seg, rng.state(), cfg});
  return result;
}

Checkpoint make_checkpoint(model::SRSModel& model, const SgdOptimizer* optimizer, const CheckpointMeta& meta) {
  nlohmann::json doc;
  doc["format_version"] = kCheckpointVersion;
  doc["model"] = nlohmann::json::parse(model.config().to_json());
  doc["has_reconstruction_decoder"] = model.has_reconstruction_decoder();
  doc["frozen"] = model.reconstruction_frozen();
  doc["phase"] = meta.phase;
  doc["epoch"] = meta.epoch;
  doc["rng"] = {{"seed", meta.rng.seed}, {"stream", meta.rng.stream}, {"counter", meta.rng.counter}};
  doc["train"] = nlohmann::json::parse(meta.train.to_json());
  Checkpoint ckpt;
  ckpt.config = doc.dump();
  auto state = model.state();
  for (const auto& p : state.params) ckpt.tensors.emplace_back(p.name, p.var.value());
  for (const auto& b : state.buffers) ckpt.tensors.emplace_back(b.name, *b.tensor);
  if (optimizer != nullptr) {
    for (const auto& [name, v] : optimizer->velocity()) ckpt.tensors.emplace_back(kVelocityPrefix + name, v);
  }
  return ckpt;
}

model::ModelConfig checkpoint_model_config(const Checkpoint& ckpt) {
  const auto doc = config_document(ckpt);
  require(doc.value("format_version", 0) == kCheckpointVersion, ErrorKind::kVersionMismatch,
          "checkpoint config version is not supported");
  require(doc.contains("model"), ErrorKind::kCheckpointMismatch, "checkpoint has no model config");
  return model::ModelConfig::from_json(doc.at("model").dump());
}

CheckpointMeta checkpoint_meta(const Checkpoint& ckpt) {
  const auto doc = config_document(ckpt);
  CheckpointMeta meta;
  try {
    meta.phase = doc.value("phase", std::string());
    meta.epoch = doc.value("epoch", std::int64_t{0});
    if (doc.contains("rng")) {
      meta.rng.seed = doc.at("rng").at("seed").get<std::uint64_t>();
      meta.rng.stream = doc.at("rng").at("stream").get<std::uint64_t>();
      meta.rng.counter = doc.at("rng").at("counter").get<std::uint64_t>();
    }
    if (doc.contains("train")) meta.train = TrainConfig::from_json(doc.at("train").dump());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, std::string("bad checkpoint metadata: ") + e.what());
  }
  return meta;
}

void load_model_state(model::SRSModel& model, const Checkpoint& ckpt) {
  const model::ModelConfig cfg = checkpoint_model_config(ckpt);
  require(cfg == model.config(), ErrorKind::kCheckpointMismatch,
          "checkpoint model config " + cfg.to_json() + " differs from " + model.config().to_json());
  auto state = model.state();
  for (auto& p : state.params) {
    const Tensor* t = ckpt.find(p.name);
    require(t != nullptr, ErrorKind::kCheckpointMismatch, "checkpoint lacks tensor " + p.name);
    copy_tensor(p.name, *t, p.var.mutable_value());
  }
  for (auto& b : state.buffers) {
    const Tensor* t = ckpt.find(b.name);
    require(t != nullptr, ErrorKind::kCheckpointMismatch, "checkpoint lacks buffer " + b.name);
    copy_tensor(b.name, *t, *b.tensor);
  }
}

model::SRSModel model_from_checkpoint(const Checkpoint& ckpt) {
  model::SRSModel model(checkpoint_model_config(ckpt), 0);
  const auto doc = config_document(ckpt);
  if (!doc.value("has_reconstruction_decoder", true) && model.has_reconstruction_decoder()) {
    model.drop_reconstruction_decoder();
  }
  if (doc.value("frozen", false) && model.has_reconstruction()) model.freeze_reconstruction_encoder();
  load_model_state(model, ckpt);
  return model;
}

void load_reconstruction_encoder(model::SRSModel& model, const Checkpoint& ckpt) {
  require(model.has_reconstruction(), ErrorKind::kCheckpointMismatch, "model has no reconstruction encoder");
  const model::ModelConfig cfg = checkpoint_model_config(ckpt);
  require(cfg.in_channels == model.config().in_channels && cfg.levels == model.config().levels &&
              cfg.widths == model.config().widths,
          ErrorKind::kCheckpointMismatch,
          "phase-one checkpoint topology " + cfg.to_json() + " differs from " + model.config().to_json());
  nn::StateList<float> state;
  model.recon_encoder().collect("recon_encoder", state);
  for (auto& p : state.params) {
    const Tensor* t = ckpt.find(p.name);
    require(t != nullptr, ErrorKind::kCheckpointMismatch, "phase-one checkpoint lacks " + p.name);
    copy_tensor(p.name, *t, p.var.mutable_value());
  }
  for (auto& b : state.buffers) {
    const Tensor* t = ckpt.find(b.name);
    require(t != nullptr, ErrorKind::kCheckpointMismatch, "phase-one checkpoint lacks " + b.name);
    copy_tensor(b.name, *t, *b.tensor);
  }
}

void load_optimizer_state(SgdOptimizer& optimizer, const Checkpoint& ckpt) {
  optimizer.velocity().clear();
  const std::string prefix = kVelocityPrefix;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.rfind(prefix, 0) == 0) optimizer.velocity().emplace(name.substr(prefix.size()), t);
  }
}

template Var<float> loss_recon(const Var<float>&, const Tensor&);
template Var<double> loss_recon(const Var<double>&, const TensorD&);
template Var<float> loss_recon_masked(const Var<float>&, const Tensor&, const Tensor&);
template Var<double> loss_recon_masked(const Var<double>&, const TensorD&, const TensorD&);
template Var<float> loss_seg(const Var<float>&, const Tensor&, double);
template Var<double> loss_seg(const Var<double>&, const TensorD&, double);
template void sgd_update(Tensor&, const Tensor&, Tensor&, double, double, double);
template void sgd_update(TensorD&, const TensorD&, TensorD&, double, double, double);

}  // namespace srs::train
