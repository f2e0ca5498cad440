#pragma once

// Stage-I training: acoustic model and style network optimized jointly. Each
// step teacher-forces one utterance; the style embedding comes from the
// utterance's own ground-truth mel through the reference encoder, so the
// style space organizes itself without emotion labels.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "temotts/corpus/features.hpp"
#include "temotts/pipeline/checkpoint.hpp"
#include "temotts/pipeline/optimizer.hpp"

namespace temotts::pipeline {

struct Stage1TrainConfig {
  std::size_t max_steps = 2000;
  std::size_t val_every = 100;
  std::uint64_t seed = 1234;
  bool log_progress = true;
};

struct StepLoss {
  std::size_t step = 0;
  double lr = 0.0;
  double total = 0.0;
  double mel_l1 = 0.0;
  double duration_mse = 0.0;
  double pitch_mse = 0.0;
  double energy_mse = 0.0;
};

struct Stage1TrainResult {
  Stage1Bundle bundle;  // best-on-validation parameters
  std::vector<StepLoss> curve;
  double initial_train_mel_l1 = 0.0;  // untrained baseline, eval mode
  double final_train_mel_l1 = 0.0;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_step = 0;
};

inline void write_loss_curve_csv(const std::filesystem::path& path,
                                 const std::vector<StepLoss>& curve) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "step,lr,total,mel_l1,duration_mse,pitch_mse,energy_mse\n";
  os.precision(10);
  for (const auto& s : curve)
    os << s.step << ',' << s.lr << ',' << s.total << ',' << s.mel_l1 << ',' << s.duration_mse
       << ',' << s.pitch_mse << ',' << s.energy_mse << '\n';
}

namespace detail {

struct PreparedUtt {
  const corpus::FeatureRecord* rec;
  std::vector<std::size_t> ids;
  acoustic::VarianceTargets targets;
  nn::Tensor mel_target;
};

inline std::vector<PreparedUtt> prepare(const std::vector<corpus::FeatureRecord>& records,
                                        const Stage1Bundle& bundle) {
  std::vector<PreparedUtt> out;
  for (const auto& rec : records) {
    if (rec.durations.empty() || rec.durations.size() != rec.phonemes.size()) {
      log::warn("stage1: '" + rec.id + "' has no usable durations, skipped");
      continue;
    }
    if (rec.mel.frames < bundle.style_cfg.min_frames()) {
      log::warn("stage1: '" + rec.id + "' is shorter than the reference encoder minimum, skipped");
      continue;
    }
    PreparedUtt p;
    p.rec = &rec;
    try {
      p.ids = bundle.inventory.encode(rec.phonemes);
    } catch (const std::exception& e) {
      log::warn(std::string("stage1: '") + rec.id + "' skipped: " + e.what());
      continue;
    }
    p.targets.pitch = rec.pitch;
    p.targets.energy = rec.energy;
    p.targets.durations = rec.durations;
    p.mel_target = nn::Tensor::make({rec.mel.frames, rec.mel.n_mels}, rec.mel.values);
    out.push_back(std::move(p));
  }
  return out;
}

inline acoustic::StageILoss forward_loss(const Stage1Bundle& bundle, const PreparedUtt& utt,
                                         const nn::Ctx& ctx) {
  nn::Tensor style = bundle.gst.style_from_mel(utt.rec->mel);
  nn::Tensor hidden = bundle.acoustic.encode_text(utt.ids, ctx, &style);
  auto var = bundle.acoustic.variance_adapt(hidden, ctx, &utt.targets);
  nn::Tensor mel_pred = bundle.acoustic.decode_mel(var.frame_hidden, ctx);
  return acoustic::stage1_loss(mel_pred, utt.mel_target, var, utt.targets);
}

struct EvalLoss {
  double total = 0.0;
  double mel_l1 = 0.0;
};

inline EvalLoss mean_eval_loss(const Stage1Bundle& bundle,
                               const std::vector<PreparedUtt>& utts) {
  EvalLoss out;
  if (utts.empty()) return out;
  nn::Ctx ctx = nn::Ctx::eval();
  for (const auto& u : utts) {
    auto l = forward_loss(bundle, u, ctx);
    out.total += l.total.item();
    out.mel_l1 += l.mel_l1;
  }
  out.total /= static_cast<double>(utts.size());
  out.mel_l1 /= static_cast<double>(utts.size());
  return out;
}

inline std::vector<double> snapshot_params(const nn::ParamMap& pm) {
  std::vector<double> v;
  for (const auto& [_, t] : pm.items) v.insert(v.end(), t.data().begin(), t.data().end());
  return v;
}

inline void restore_params(nn::ParamMap& pm, const std::vector<double>& v) {
  std::size_t pos = 0;
  for (auto& [_, t] : pm.items) {
    std::copy(v.begin() + static_cast<long>(pos), v.begin() + static_cast<long>(pos + t.numel()),
              t.data().begin());
    pos += t.numel();
  }
}

}  // namespace detail

inline Stage1TrainResult train_stage1(const std::vector<corpus::FeatureRecord>& train_records,
                                      const std::vector<corpus::FeatureRecord>& val_records,
                                      const acoustic::AcousticConfig& acfg,
                                      const style::StyleConfig& scfg,
                                      const corpus::PhonemeInventory& inventory,
                                      const OptimizerConfig& opt_cfg,
                                      const Stage1TrainConfig& tcfg = {}) {
  opt_cfg.validate();
  Stage1TrainResult res;
  res.bundle = make_stage1_bundle(acfg, scfg, inventory, tcfg.seed);

  auto train_set = detail::prepare(train_records, res.bundle);
  if (train_set.empty()) throw Error("stage1: no trainable utterances after preparation");
  auto val_set = detail::prepare(val_records, res.bundle);
  const auto& eval_set = val_set.empty() ? train_set : val_set;
  if (val_set.empty()) log::warn("stage1: empty validation set, validating on train data");

  nn::ParamMap pm = res.bundle.params();
  nn::Adam opt(pm, opt_cfg.adam());

  res.initial_train_mel_l1 = detail::mean_eval_loss(res.bundle, train_set).mel_l1;

  Rng rng(tcfg.seed);
  Rng order_rng = rng.derive("order");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  order_rng.shuffle(order);
  std::size_t cursor = 0;

  std::vector<double> best = detail::snapshot_params(pm);

  for (std::size_t step = 1; step <= tcfg.max_steps; ++step) {
    if (cursor == order.size()) {
      order_rng.shuffle(order);
      cursor = 0;
    }
    const auto& utt = train_set[order[cursor++]];

    nn::Ctx ctx = nn::Ctx::train(rng);
    auto loss = detail::forward_loss(res.bundle, utt, ctx);
    const double total = loss.total.item();
    if (!std::isfinite(total)) {
      throw Error("stage1: non-finite loss at step " + std::to_string(step) + " on '" +
                  utt.rec->id + "' (mel_l1=" + std::to_string(loss.mel_l1) +
                  ", dur=" + std::to_string(loss.duration_mse) +
                  ", pitch=" + std::to_string(loss.pitch_mse) +
                  ", energy=" + std::to_string(loss.energy_mse) + ")");
    }

    pm.zero_grad();
    loss.total.backward();
    const double lr = opt_cfg.lr_at(step);
    opt.step(lr);

    res.curve.push_back(
        {step, lr, total, loss.mel_l1, loss.duration_mse, loss.pitch_mse, loss.energy_mse});

    if (step % tcfg.val_every == 0 || step == tcfg.max_steps) {
      const auto val = detail::mean_eval_loss(res.bundle, eval_set);
      if (val.total < res.best_val) {
        res.best_val = val.total;
        res.best_step = step;
        best = detail::snapshot_params(pm);
      }
      if (tcfg.log_progress)
        log::info("stage1 step " + std::to_string(step) + " train_total=" + std::to_string(total) +
                  " val_total=" + std::to_string(val.total));
    }
  }

  detail::restore_params(pm, best);
  res.final_train_mel_l1 = detail::mean_eval_loss(res.bundle, train_set).mel_l1;
  res.bundle.step = tcfg.max_steps;
  res.bundle.val_metrics = {{"best_val_total", res.best_val},
                            {"best_step", res.best_step},
                            {"initial_train_mel_l1", res.initial_train_mel_l1},
                            {"final_train_mel_l1", res.final_train_mel_l1}};
  return res;
}

}  // namespace temotts::pipeline
