// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "srs/checkpoint.hpp"
#include "srs/data.hpp"
#include "srs/model.hpp"

namespace srs::train {

enum class ReconMode { kDirect, kMasked };
std::string_view to_string(ReconMode m);
ReconMode parse_recon_mode(std::string_view name);

struct TrainConfig {
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::int64_t batch_size = 8;
  std::int64_t epochs_recon = 100;
  std::int64_t epochs_seg = 300;
  std::uint64_t seed = 0;
  ReconMode recon_mode = ReconMode::kDirect;
  bool freeze = true;
  std::int64_t mask_patch = 16;
  double mask_ratio = 0.6;
  bool augment = true;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(std::string_view json);
  bool operator==(const TrainConfig&) const = default;
};

/// 1/(2N) sum_i meanpix((recon_i - target_i)^2) over the N samples.
template <typename T>
Var<T> loss_recon(const Var<T>& recon, const BasicTensor<T>& target);

/// As loss_recon, with each sample's mean taken over the pixels where
/// mask (B, 1, H, W) is 1 (all channels). Samples with no masked pixel
/// contribute zero.
template <typename T>
Var<T> loss_recon_masked(const Var<T>& recon, const BasicTensor<T>& target, const BasicTensor<T>& mask);

/// 0.5 * BCE(sigmoid(logits), target) + mean over samples of
/// 1 - (2 sum(p s) + eps) / (sum(p) + sum(s) + eps). BCE is the stable fused
/// form on logits, averaged over every element. Throws NonBinaryTarget.
template <typename T>
Var<T> loss_seg(const Var<T>& logits, const BasicTensor<T>& target, double eps = 1e-5);

/// lr0 * (1 - epoch / max_epoch)^0.9 for 0 <= epoch <= max_epoch.
double lr_at(std::int64_t epoch, const TrainConfig& cfg, std::int64_t max_epoch);

/// v <- momentum v + (g + wd p); p <- p - lr v.
template <typename T>
void sgd_update(BasicTensor<T>& param, const BasicTensor<T>& grad, BasicTensor<T>& velocity, double lr,
                double momentum, double weight_decay);

class SgdOptimizer {
 public:
  SgdOptimizer(double momentum, double weight_decay) : momentum_(momentum), weight_decay_(weight_decay) {}

  /// Updates every listed parameter from its gradient (zero when absent).
  void step(const std::vector<nn::NamedParam<float>>& params, double lr);
  std::map<std::string, Tensor>& velocity() { return velocity_; }
  const std::map<std::string, Tensor>& velocity() const { return velocity_; }

 private:
  double momentum_;
  double weight_decay_;
  std::map<std::string, Tensor> velocity_;
};

struct MaskedBatch {
  Tensor images;  // masked tiles set to 0
  Tensor mask;    // (B, 1, H, W), 1 on masked pixels
};

/// Zeroes round(ratio * tiles) randomly chosen non-overlapping patch x patch
/// tiles of every image. Throws DivisibilityError or InvalidArgument.
MaskedBatch masked_reconstruction_batch(const Tensor& images, Rng& rng, std::int64_t patch, double ratio);

struct EpochLog {
  std::int64_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_iou = -1.0;  // mean batch IoU in phase two, -1 otherwise
  double val_iou = -1.0;    // -1 when not evaluated
  double val_f1 = -1.0;
  double val_dice = -1.0;
  double wall_seconds = 0.0;
};

/// epoch,lr,train_loss,val_iou,val_f1,val_dice,wall_seconds. Fields that
/// were not evaluated are left empty. Wall time is optional so logs of
/// identical runs compare equal.
std::string metrics_csv(const std::vector<EpochLog>& log, bool include_wall_time = true);

struct PhaseOptions {
  /// Evaluated after every phase-two epoch when non-null.
  const data::Dataset* validation = nullptr;
  /// When non-empty, the CSV log is rewritten after every epoch.
  std::string log_path;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
};

/// Phase one: trains the reconstruction encoder and decoder on unlabeled
/// images. Throws EmptyDataset.
TrainResult train_phase_one(model::SRSModel& model, const data::Dataset& dataset, const TrainConfig& cfg,
                            const PhaseOptions& options = {});

/// Phase two: loads the reconstruction encoder from `phase_one` (required
/// for dpconv_recon), drops the reconstruction decoder, freezes the encoder
/// when cfg.freeze, and trains the rest with loss_seg. Throws EmptyDataset,
/// MissingMask, MissingPhaseOneWeights, CheckpointMismatch.
TrainResult train_phase_two(model::SRSModel& model, const data::Dataset& dataset, const Checkpoint* phase_one,
                            const TrainConfig& cfg, const PhaseOptions& options = {});

struct CheckpointMeta {
  std::string phase;  // "recon" or "seg"
  std::int64_t epoch = 0;
  Rng::State rng;
  TrainConfig train;
};

/// Model parameters and buffers under their state names, then optimizer
/// velocity as "optim.momentum/<param>".
Checkpoint make_checkpoint(model::SRSModel& model, const SgdOptimizer* optimizer, const CheckpointMeta& meta);
model::ModelConfig checkpoint_model_config(const Checkpoint& ckpt);
CheckpointMeta checkpoint_meta(const Checkpoint& ckpt);
/// Copies every model tensor from ckpt. Throws CheckpointMismatch when the
/// topology differs or a tensor is missing or misshapen.
void load_model_state(model::SRSModel& model, const Checkpoint& ckpt);
/// A model with the checkpoint's topology (decoder dropped, encoder frozen as
/// recorded) and its tensors.
model::SRSModel model_from_checkpoint(const Checkpoint& ckpt);
/// Copies only the reconstruction-encoder tensors.
void load_reconstruction_encoder(model::SRSModel& model, const Checkpoint& ckpt);
void load_optimizer_state(SgdOptimizer& optimizer, const Checkpoint& ckpt);

}  // namespace srs::train
