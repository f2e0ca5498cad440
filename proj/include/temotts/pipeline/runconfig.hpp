#pragma once

// Run configuration and run-directory plumbing: one JSON document drives the
// whole pipeline, a snapshot of it is written into the run directory before
// any work, and a lock file keeps concurrent writers out.

#include <cstdlib>
#include <fcntl.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "temotts/acoustic/model.hpp"
#include "temotts/adaptation/net.hpp"
#include "temotts/corpus/features.hpp"
#include "temotts/corpus/split.hpp"
#include "temotts/emotion/prune.hpp"
#include "temotts/pipeline/optimizer.hpp"
#include "temotts/pipeline/train1.hpp"
#include "temotts/style/gst.hpp"

namespace temotts::pipeline {

struct RunConfig {
  // paths
  std::string manifest;
  std::string align_dir;
  std::string run_dir;
  std::string cache_dir;  // empty: <run_dir>/cache, overridable via TEMOTTS_CACHE_DIR
  std::string g2p_dictionary;

  corpus::FeatureConfig features;
  corpus::SplitConfig split;
  acoustic::AcousticConfig acoustic;
  style::StyleConfig style;
  adaptation::AdaptationConfig adaptation;
  adaptation::AdaptationTrainConfig stage2_train;
  OptimizerConfig optimizer;
  Stage1TrainConfig stage1_train;
  emotion::PruningConfig pruning;

  std::string provider = "stub:builtin";
  std::size_t provider_dim = 768;
  std::string vocoder = "griffinlim";
  std::uint64_t seed = 1234;

  void validate() const {
    if (acoustic.d_model != style.d_style)
      throw Error("run config: style.d_style must equal acoustic.d_model");
    optimizer.validate();
    pruning.validate();
    acoustic.validate();
    style.validate();
    adaptation.validate();
  }

  std::filesystem::path resolved_cache_dir() const {
    if (const char* env = std::getenv("TEMOTTS_CACHE_DIR"); env && *env) return env;
    if (!cache_dir.empty()) return cache_dir;
    return std::filesystem::path(run_dir) / "cache";
  }

  nlohmann::json to_json() const {
    return {{"manifest", manifest},
            {"align_dir", align_dir},
            {"run_dir", run_dir},
            {"cache_dir", cache_dir},
            {"g2p_dictionary", g2p_dictionary},
            {"features", features.to_json()},
            {"split",
             {{"train", split.train}, {"val", split.val}, {"test", split.test}, {"seed", split.seed}}},
            {"acoustic", acoustic.to_json()},
            {"style", style.to_json()},
            {"adaptation", adaptation.to_json()},
            {"stage2_train",
             {{"batch_size", stage2_train.batch_size},
              {"max_epochs", stage2_train.max_epochs},
              {"patience", stage2_train.patience},
              {"lr", stage2_train.lr},
              {"val_fraction", stage2_train.val_fraction},
              {"seed", stage2_train.seed}}},
            {"optimizer", optimizer.to_json()},
            {"stage1_train",
             {{"max_steps", stage1_train.max_steps},
              {"val_every", stage1_train.val_every},
              {"seed", stage1_train.seed}}},
            {"pruning", {{"threshold", pruning.threshold}}},
            {"provider", provider},
            {"provider_dim", provider_dim},
            {"vocoder", vocoder},
            {"seed", seed}};
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    c.manifest = j.value("manifest", c.manifest);
    c.align_dir = j.value("align_dir", c.align_dir);
    c.run_dir = j.value("run_dir", c.run_dir);
    c.cache_dir = j.value("cache_dir", c.cache_dir);
    c.g2p_dictionary = j.value("g2p_dictionary", c.g2p_dictionary);
    if (j.contains("features")) {
      const auto& f = j.at("features");
      if (f.contains("mel")) c.features.mel = audio::MelConfig::from_json(f.at("mel"));
      if (f.contains("pitch")) {
        const auto& p = f.at("pitch");
        c.features.pitch.window_sec = p.value("window_sec", c.features.pitch.window_sec);
        c.features.pitch.fmin = p.value("fmin", c.features.pitch.fmin);
        c.features.pitch.fmax = p.value("fmax", c.features.pitch.fmax);
        c.features.pitch.voicing_threshold =
            p.value("voicing_threshold", c.features.pitch.voicing_threshold);
      }
      if (f.contains("align")) {
        const auto& a = f.at("align");
        c.features.align.durations_in_seconds =
            a.value("durations_in_seconds", c.features.align.durations_in_seconds);
        c.features.align.max_mismatch_fraction =
            a.value("max_mismatch_fraction", c.features.align.max_mismatch_fraction);
      }
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split.train = s.value("train", c.split.train);
      c.split.val = s.value("val", c.split.val);
      c.split.test = s.value("test", c.split.test);
      c.split.seed = s.value("seed", c.split.seed);
    }
    if (j.contains("acoustic")) c.acoustic = acoustic::AcousticConfig::from_json(j.at("acoustic"));
    if (j.contains("style")) c.style = style::StyleConfig::from_json(j.at("style"));
    if (j.contains("adaptation"))
      c.adaptation = adaptation::AdaptationConfig::from_json(j.at("adaptation"));
    if (j.contains("stage2_train")) {
      const auto& t = j.at("stage2_train");
      c.stage2_train.batch_size = t.value("batch_size", c.stage2_train.batch_size);
      c.stage2_train.max_epochs = t.value("max_epochs", c.stage2_train.max_epochs);
      c.stage2_train.patience = t.value("patience", c.stage2_train.patience);
      c.stage2_train.lr = t.value("lr", c.stage2_train.lr);
      c.stage2_train.val_fraction = t.value("val_fraction", c.stage2_train.val_fraction);
      c.stage2_train.seed = t.value("seed", c.stage2_train.seed);
    }
    if (j.contains("optimizer")) c.optimizer = OptimizerConfig::from_json(j.at("optimizer"));
    if (j.contains("stage1_train")) {
      const auto& t = j.at("stage1_train");
      c.stage1_train.max_steps = t.value("max_steps", c.stage1_train.max_steps);
      c.stage1_train.val_every = t.value("val_every", c.stage1_train.val_every);
      c.stage1_train.seed = t.value("seed", c.stage1_train.seed);
    }
    if (j.contains("pruning")) c.pruning.threshold = j.at("pruning").value("threshold", 0.7);
    c.provider = j.value("provider", c.provider);
    c.provider_dim = j.value("provider_dim", c.provider_dim);
    c.vocoder = j.value("vocoder", c.vocoder);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
  }
};

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError(path.string(), "run config JSON");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

// Run-directory layout. Everything a run produces lives under one root.
struct RunPaths {
  std::filesystem::path root;

  explicit RunPaths(const std::filesystem::path& run_dir) : root(run_dir) {}

  std::filesystem::path config_snapshot() const { return root / "config.json"; }
  std::filesystem::path lock() const { return root / ".lock"; }
  std::filesystem::path features_manifest() const { return root / "features.json"; }
  std::filesystem::path splits() const { return root / "splits.json"; }
  std::filesystem::path stage1_ckpt() const { return root / "stage1.ckpt"; }
  std::filesystem::path stage1_curve() const { return root / "stage1_loss.csv"; }
  std::filesystem::path token_bank() const { return root / "token_bank.tsv"; }
  std::filesystem::path prune_report() const { return root / "prune_report.json"; }
  std::filesystem::path pairs() const { return root / "pairs.jsonl"; }
  std::filesystem::path adaptation_ckpt() const { return root / "adaptation.ckpt"; }
  std::filesystem::path stage2_curve() const { return root / "stage2_loss.csv"; }
  std::filesystem::path synth_dir() const { return root / "synth"; }
};

// Writes the config snapshot on first use; a later run with a different
// config warns rather than failing, so deliberate reconfiguration stays
// possible while accidents remain visible.
inline void snapshot_config(const RunConfig& cfg, const RunPaths& paths) {
  std::filesystem::create_directories(paths.root);
  const auto current = cfg.to_json().dump(2);
  if (std::filesystem::exists(paths.config_snapshot())) {
    std::ifstream is(paths.config_snapshot());
    std::string existing((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    while (!existing.empty() && (existing.back() == '\n' || existing.back() == '\r'))
      existing.pop_back();
    if (existing != current)
      log::warn("run config differs from the snapshot in " + paths.config_snapshot().string() +
                "; artifacts in this run directory may mix configurations");
    return;
  }
  std::ofstream os(paths.config_snapshot());
  os << current << '\n';
  if (!os) throw Error("cannot write config snapshot: " + paths.config_snapshot().string());
}

// Exclusive run-directory lock (O_EXCL creation). Throws when the lock is
// already held; the error names the file so a stale lock can be removed.
class RunLock {
 public:
  explicit RunLock(const RunPaths& paths) : path_(paths.lock()) {
    std::filesystem::create_directories(paths.root);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw Error("run directory is locked (" + path_.string() +
                  " exists); another process may be writing, or remove the stale lock");
    const std::string pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] auto n = ::write(fd_, pid.data(), pid.size());
  }

  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

  ~RunLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

}  // namespace temotts::pipeline
