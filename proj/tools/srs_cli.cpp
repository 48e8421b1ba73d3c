// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

// srs: synthetic data, two-phase training, evaluation and model accounting.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "srs/checkpoint.hpp"
#include "srs/data.hpp"
#include "srs/error.hpp"
#include "srs/gradcheck.hpp"
#include "srs/metrics.hpp"
#include "srs/model.hpp"
#include "srs/train.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace srs;

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values. A flag only overrides the config file when it was given.
struct Args {
  std::string config_path;
  std::string out = ".";
  std::uint64_t seed = 0;

  // synth
  std::int64_t n = 700;
  std::int64_t size = 64;
  std::string mode = "hard";

  // data
  std::string data;
  std::string val;
  std::int64_t resize = 0;

  // model
  std::string variant;
  std::vector<std::int64_t> widths;
  std::int64_t dp_k = 1;
  std::int64_t dp_c_in = 8;
  std::int64_t dp_c_info = 64;

  // train
  double lr0 = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::int64_t batch = 8;
  std::int64_t epochs = 0;
  std::string recon_mode;
  std::int64_t mask_patch = 16;
  double mask_ratio = 0.6;
  bool no_freeze = false;
  bool no_augment = false;
  std::string phase1_ckpt;

  // eval
  std::string ckpt;
  double threshold = 0.5;

  // gradcheck
  int configs = 20;
  std::vector<std::string> layers;
};

bool given(const CLI::App* app, const std::string& name) {
  const CLI::Option* opt = app->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

std::uint64_t resolve_seed(const CLI::App* app, const Args& a, const json& file) {
  if (given(app, "--seed")) return a.seed;
  if (file.contains("seed")) return file.at("seed").get<std::uint64_t>();
  if (const char* env = std::getenv("SRS_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("SRS_SEED is not an unsigned integer: ") + env);
    }
  }
  return 0;
}

json read_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoError, "cannot open config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) fail(ErrorKind::kInvalidArgument, "config " + path + " is not a JSON object");
    return j;
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, "config " + path + ": " + e.what());
  }
}

json section(const json& file, const char* key) {
  return file.contains(key) ? file.at(key) : json::object();
}

// Default, then the config file, then flags.
model::ModelConfig resolve_model(const CLI::App* app, const Args& a, const json& file,
                                 const model::ModelConfig& base = {}) {
  json j = json::parse(base.to_json());
  j.merge_patch(section(file, "model"));
  if (given(app, "--variant")) j["variant"] = a.variant;
  if (given(app, "--widths")) {
    j["widths"] = a.widths;
    j["levels"] = a.widths.size();
  }
  if (given(app, "--dp-k")) j["dpconv"]["k"] = a.dp_k;
  if (given(app, "--dp-c-in")) j["dpconv"]["c_in"] = a.dp_c_in;
  if (given(app, "--dp-c-info")) j["dpconv"]["c_info"] = a.dp_c_info;
  return model::ModelConfig::from_json(j.dump());
}

train::TrainConfig resolve_train(const CLI::App* app, const Args& a, const json& file, std::uint64_t seed,
                                 const char* epochs_key) {
  json j = json::parse(train::TrainConfig{}.to_json());
  j.merge_patch(section(file, "train"));
  if (given(app, "--lr")) j["lr0"] = a.lr0;
  if (given(app, "--momentum")) j["momentum"] = a.momentum;
  if (given(app, "--weight-decay")) j["weight_decay"] = a.weight_decay;
  if (given(app, "--batch")) j["batch_size"] = a.batch;
  if (given(app, "--epochs")) j[epochs_key] = a.epochs;
  if (given(app, "--recon-mode")) j["recon_mode"] = a.recon_mode;
  if (given(app, "--mask-patch")) j["mask_patch"] = a.mask_patch;
  if (given(app, "--mask-ratio")) j["mask_ratio"] = a.mask_ratio;
  if (given(app, "--no-freeze")) j["freeze"] = false;
  if (given(app, "--no-augment")) j["augment"] = false;
  j["seed"] = seed;
  return train::TrainConfig::from_json(j.dump());
}

std::string resolve_string(const CLI::App* app, const std::string& flag, const std::string& value,
                           const json& file, const char* key) {
  if (given(app, flag)) return value;
  if (file.contains(key)) return file.at(key).get<std::string>();
  return value;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIoError, "write failed: " + path.string());
}

fs::path prepare_out(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kIoError, "cannot create " + out + ": " + ec.message());
  return dir;
}

void archive_run_config(const fs::path& dir, json run) { write_text(dir / "run_config.json", run.dump(2) + "\n"); }

data::Dataset load_data(const std::string& root, std::int64_t side) {
  if (root.empty()) throw UsageError("--data is required");
  return data::load_dataset_root(root, side);
}

void print_epoch(const char* phase, const train::EpochLog& e) {
  std::printf("%s epoch %lld lr %.6g loss %.6f", phase, static_cast<long long>(e.epoch), e.lr, e.train_loss);
  if (e.val_iou >= 0.0) std::printf(" val_iou %.4f", e.val_iou);
  std::printf("\n");
  std::fflush(stdout);
}

int cmd_synth(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::uint64_t seed = resolve_seed(app, a, file);
  const json synth = section(file, "synth");
  const std::int64_t n = given(app, "--n") ? a.n : synth.value("n", a.n);
  const std::int64_t size = given(app, "--size") ? a.size : synth.value("size", a.size);
  const std::string mode = given(app, "--mode") ? a.mode : synth.value("mode", a.mode);
  const std::string out = resolve_string(app, "--out", a.out, file, "out");
  Rng rng(seed);
  const data::Dataset ds = data::synth_weak_targets(n, size, rng, data::parse_difficulty(mode));
  const fs::path dir = prepare_out(out);
  data::export_dataset(ds, out);
  archive_run_config(dir, {{"command", "synth"}, {"seed", seed}, {"synth", {{"n", n}, {"size", size}, {"mode", mode}}}});
  std::printf("wrote %zu samples to %s (checksum %016llx)\n", ds.size(), out.c_str(),
              static_cast<unsigned long long>(ds.checksum()));
  return 0;
}

int cmd_train_recon(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::uint64_t seed = resolve_seed(app, a, file);
  model::ModelConfig mcfg = resolve_model(app, a, file);
  if (mcfg.variant != model::Variant::kDPConvRecon) {
    throw UsageError("train-recon needs the dpconv_recon variant, got " + std::string(model::to_string(mcfg.variant)));
  }
  const train::TrainConfig tcfg = resolve_train(app, a, file, seed, "epochs_recon");
  const std::string data_root = resolve_string(app, "--data", a.data, file, "data");
  const std::string out = resolve_string(app, "--out", a.out, file, "out");
  const data::Dataset ds = load_data(data_root, a.resize);
  const fs::path dir = prepare_out(out);
  archive_run_config(dir, {{"command", "train-recon"},
                           {"seed", seed},
                           {"data", data_root},
                           {"model", json::parse(mcfg.to_json())},
                           {"train", json::parse(tcfg.to_json())}});

  model::SRSModel m(mcfg, seed);
  train::PhaseOptions opts;
  opts.log_path = (dir / "recon_log.csv").string();
  opts.on_epoch = [](const train::EpochLog& e) { print_epoch("recon", e); };
  const train::TrainResult r = train::train_phase_one(m, ds, tcfg, opts);
  save_checkpoint(r.checkpoint, (dir / "recon.ckpt").string());
  std::printf("saved %s\n", (dir / "recon.ckpt").c_str());
  return 0;
}

int cmd_train_seg(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::uint64_t seed = resolve_seed(app, a, file);
  const std::string p1_path = resolve_string(app, "--phase1-ckpt", a.phase1_ckpt, file, "phase1_ckpt");
  std::optional<Checkpoint> p1;
  model::ModelConfig base;
  if (!p1_path.empty()) {
    p1 = load_checkpoint(p1_path);
    base = train::checkpoint_model_config(*p1);
  }
  const model::ModelConfig mcfg = resolve_model(app, a, file, base);
  if (mcfg.variant == model::Variant::kDPConvRecon && !p1) {
    throw UsageError("train-seg with variant dpconv_recon needs --phase1-ckpt");
  }
  const train::TrainConfig tcfg = resolve_train(app, a, file, seed, "epochs_seg");
  const std::string data_root = resolve_string(app, "--data", a.data, file, "data");
  const std::string val_root = resolve_string(app, "--val", a.val, file, "val");
  const std::string out = resolve_string(app, "--out", a.out, file, "out");
  const data::Dataset ds = load_data(data_root, a.resize);
  std::optional<data::Dataset> val;
  if (!val_root.empty()) val = data::load_dataset_root(val_root, a.resize);
  const fs::path dir = prepare_out(out);
  archive_run_config(dir, {{"command", "train-seg"},
                           {"seed", seed},
                           {"data", data_root},
                           {"val", val_root},
                           {"phase1_ckpt", p1_path},
                           {"model", json::parse(mcfg.to_json())},
                           {"train", json::parse(tcfg.to_json())}});

  model::SRSModel m(mcfg, seed);
  train::PhaseOptions opts;
  opts.validation = val ? &*val : nullptr;
  opts.log_path = (dir / "seg_log.csv").string();
  opts.on_epoch = [](const train::EpochLog& e) { print_epoch("seg", e); };
  const train::TrainResult r = train::train_phase_two(m, ds, p1 ? &*p1 : nullptr, tcfg, opts);
  save_checkpoint(r.checkpoint, (dir / "seg.ckpt").string());
  std::printf("saved %s\n", (dir / "seg.ckpt").c_str());
  return 0;
}

int cmd_eval(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::string ckpt_path = resolve_string(app, "--ckpt", a.ckpt, file, "ckpt");
  if (ckpt_path.empty()) throw UsageError("--ckpt is required");
  const std::string data_root = resolve_string(app, "--data", a.data, file, "data");
  const std::string out = resolve_string(app, "--out", a.out, file, "out");
  const double threshold = given(app, "--threshold") ? a.threshold : file.value("threshold", a.threshold);
  const std::int64_t batch = given(app, "--batch") ? a.batch : file.value("batch", a.batch);

  model::SRSModel m = train::model_from_checkpoint(load_checkpoint(ckpt_path));
  const data::Dataset ds = load_data(data_root, a.resize);
  const metrics::MetricsReport r = metrics::evaluate(m, ds, threshold, batch);
  const fs::path dir = prepare_out(out);
  write_text(dir / "metrics.json", r.to_json() + "\n");
  write_text(dir / "metrics.csv", r.to_csv());
  archive_run_config(dir, {{"command", "eval"},
                           {"ckpt", ckpt_path},
                           {"data", data_root},
                           {"threshold", threshold},
                           {"batch", batch}});
  std::printf("images %zu iou %.4f f1 %.4f dice %.4f hd95 %.3f\n", r.per_image.size(), r.mean_iou, r.mean_f1,
              r.mean_dice, r.mean_hd95);
  return 0;
}

int cmd_gradcheck(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::uint64_t seed = resolve_seed(app, a, file);
  constexpr double kTolerance = 1e-4;
  const auto results = run_gradcheck_suite(a.configs, seed, a.layers);
  bool ok = true;
  std::printf("%-22s %8s %14s\n", "layer", "configs", "max_rel_err");
  for (const auto& r : results) {
    const bool pass = r.max_rel_error < kTolerance;
    ok = ok && pass;
    std::printf("%-22s %8d %14.3e %s\n", r.layer.c_str(), r.configs, r.max_rel_error, pass ? "ok" : "FAIL");
  }
  return ok ? 0 : kExitRuntime;
}

int cmd_count(const CLI::App* app, const Args& a) {
  const json file = read_config_file(a.config_path);
  const std::int64_t side = given(app, "--size") ? a.size : file.value("size", std::int64_t{256});
  std::vector<model::Variant> variants{model::Variant::kPureSeg, model::Variant::kDPConvSeg,
                                       model::Variant::kDPConvRecon};
  if (given(app, "--variant")) variants = {model::parse_variant(a.variant)};
  const Shape input{1, resolve_model(app, a, file).in_channels, side, side};
  std::printf("%-14s %12s %12s %12s %14s %10s\n", "variant", "params(M)", "seg(M)", "bridge", "recon_params",
              "GFLOPs");
  for (model::Variant v : variants) {
    model::ModelConfig cfg = resolve_model(app, a, file);
    cfg.variant = v;
    model::SRSModel m(cfg, 0);
    const std::int64_t total = model::count_model_params(m);
    const std::int64_t seg = m.segmentation_param_count();
    const std::int64_t bridge = m.bridge_param_count();
    std::printf("%-14s %12.4f %12.4f %12lld %14lld %10.4f\n", std::string(model::to_string(v)).c_str(), total / 1e6, seg / 1e6,
                static_cast<long long>(bridge), static_cast<long long>(total - seg - bridge),
                model::count_flops(m, input) / 1e9);
  }
  std::printf("input %lldx%lld; GFLOPs use 2 flops per multiply-accumulate\n", static_cast<long long>(side),
              static_cast<long long>(side));
  return 0;
}

void add_common(CLI::App* sub, Args& a, bool with_seed = true) {
  sub->add_option("--config", a.config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);
  sub->add_option("--out", a.out, "Output directory")->capture_default_str();
  if (with_seed) sub->add_option("--seed", a.seed, "RNG seed (falls back to SRS_SEED, then 0)");
}

void add_model_flags(CLI::App* sub, Args& a) {
  sub->add_option("--variant", a.variant, "pure_seg, dpconv_seg or dpconv_recon");
  sub->add_option("--widths", a.widths, "Encoder widths per level, e.g. 16,32,64,128")->delimiter(',');
  sub->add_option("--dp-k", a.dp_k, "Generated kernel size (odd)")->capture_default_str();
  sub->add_option("--dp-c-in", a.dp_c_in, "Channels entering the dynamic convolution")->capture_default_str();
  sub->add_option("--dp-c-info", a.dp_c_info, "Generator information channels")->capture_default_str();
}

void add_data_flags(CLI::App* sub, Args& a) {
  sub->add_option("--data", a.data, "Dataset root holding images/ and masks/");
  sub->add_option("--resize", a.resize, "Resize every sample to this square side (0 keeps sizes)")
      ->capture_default_str();
}

void add_train_flags(CLI::App* sub, Args& a) {
  sub->add_option("--lr", a.lr0, "Initial learning rate")->capture_default_str();
  sub->add_option("--momentum", a.momentum, "SGD momentum")->capture_default_str();
  sub->add_option("--weight-decay", a.weight_decay, "L2 weight decay")->capture_default_str();
  sub->add_option("--batch", a.batch, "Batch size")->capture_default_str();
  sub->add_option("--epochs", a.epochs, "Epochs for this phase (default 100 recon, 300 seg)");
  sub->add_flag("--no-augment", a.no_augment, "Disable the flip and rotation augmentation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srs: reconstruction-segmentation training with dynamic parameter convolution"};
  app.require_subcommand(1);
  Args a;

  auto* synth = app.add_subcommand("synth", "Write a synthetic weak-target dataset");
  add_common(synth, a);
  synth->add_option("--n", a.n, "Number of samples")->capture_default_str();
  synth->add_option("--size", a.size, "Image side (multiple of 8)")->capture_default_str();
  synth->add_option("--mode", a.mode, "easy or hard")->capture_default_str();

  auto* recon = app.add_subcommand("train-recon", "Phase one: train the reconstruction network");
  add_common(recon, a);
  add_data_flags(recon, a);
  add_model_flags(recon, a);
  add_train_flags(recon, a);
  recon->add_option("--recon-mode", a.recon_mode, "direct or masked");
  recon->add_option("--mask-patch", a.mask_patch, "Masked mode tile side")->capture_default_str();
  recon->add_option("--mask-ratio", a.mask_ratio, "Masked mode fraction of tiles")->capture_default_str();

  auto* seg = app.add_subcommand("train-seg", "Phase two: train segmentation through the dynamic bridge");
  add_common(seg, a);
  add_data_flags(seg, a);
  add_model_flags(seg, a);
  add_train_flags(seg, a);
  seg->add_option("--val", a.val, "Validation dataset root, evaluated every epoch");
  seg->add_option("--phase1-ckpt", a.phase1_ckpt, "Phase-one checkpoint (required for dpconv_recon)");
  seg->add_flag("--no-freeze", a.no_freeze, "Keep training the reconstruction encoder");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write metrics.json and metrics.csv");
  add_common(eval, a, false);
  add_data_flags(eval, a);
  eval->add_option("--ckpt", a.ckpt, "Checkpoint to evaluate");
  eval->add_option("--threshold", a.threshold, "Probability threshold")->capture_default_str();
  eval->add_option("--batch", a.batch, "Inference batch size")->capture_default_str();

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference gradient check of every layer");
  grad->add_option("--config", a.config_path, "JSON config file (reads seed)")->check(CLI::ExistingFile);
  grad->add_option("--seed", a.seed, "RNG seed (falls back to SRS_SEED, then 0)");
  grad->add_option("--configs", a.configs, "Random configurations per layer")->capture_default_str();
  grad->add_option("--layer", a.layers, "Restrict to these layers (repeatable)")
      ->check(CLI::IsMember(gradcheck_layers()));

  auto* count = app.add_subcommand("count", "Print parameter and FLOP counts per variant");
  count->add_option("--config", a.config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);
  add_model_flags(count, a);
  count->add_option("--size", a.size, "Square input side for FLOPs (default 256)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth, a);
    if (recon->parsed()) return cmd_train_recon(recon, a);
    if (seg->parsed()) return cmd_train_seg(seg, a);
    if (eval->parsed()) return cmd_eval(eval, a);
    if (grad->parsed()) return cmd_gradcheck(grad, a);
    if (count->parsed()) return cmd_count(count, a);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const srs::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
