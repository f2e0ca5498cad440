#pragma once

// Non-autoregressive acoustic model: phoneme encoder, variance adaptor
// (duration / pitch / energy at phoneme level), length regulator, and mel
// decoder, plus the joint stage-I loss. Feed-forward transformer blocks with
// sinusoidal positions throughout.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/nn.hpp"
#include "temotts/core/tensor.hpp"

namespace temotts::acoustic {

struct AcousticConfig {
  std::size_t d_model = 256;
  std::size_t encoder_layers = 4;
  std::size_t decoder_layers = 4;
  std::size_t heads = 2;
  std::size_t ffn_hidden = 1024;
  std::size_t ffn_kernel = 9;
  std::size_t predictor_hidden = 256;
  std::size_t predictor_kernel = 3;
  double dropout = 0.1;
  std::size_t n_mels = 80;
  std::size_t min_duration = 1;  // inference clamp, frames per phoneme

  // Desk-scale preset: small enough for finite-difference gradient checks and
  // fast overfit runs, same wiring as the full model.
  static AcousticConfig toy() {
    AcousticConfig c;
    c.d_model = 32;
    c.encoder_layers = 2;
    c.decoder_layers = 2;
    c.heads = 2;
    c.ffn_hidden = 64;
    c.ffn_kernel = 3;
    c.predictor_hidden = 32;
    c.dropout = 0.0;
    return c;
  }

  void validate() const {
    if (d_model == 0 || d_model % heads != 0)
      throw Error("acoustic config: d_model must be a positive multiple of heads");
    if (n_mels == 0) throw Error("acoustic config: n_mels must be positive");
  }

  nlohmann::json to_json() const {
    return {{"d_model", d_model},
            {"encoder_layers", encoder_layers},
            {"decoder_layers", decoder_layers},
            {"heads", heads},
            {"ffn_hidden", ffn_hidden},
            {"ffn_kernel", ffn_kernel},
            {"predictor_hidden", predictor_hidden},
            {"predictor_kernel", predictor_kernel},
            {"dropout", dropout},
            {"n_mels", n_mels},
            {"min_duration", min_duration}};
  }

  static AcousticConfig from_json(const nlohmann::json& j) {
    AcousticConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.encoder_layers = j.value("encoder_layers", c.encoder_layers);
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.heads = j.value("heads", c.heads);
    c.ffn_hidden = j.value("ffn_hidden", c.ffn_hidden);
    c.ffn_kernel = j.value("ffn_kernel", c.ffn_kernel);
    c.predictor_hidden = j.value("predictor_hidden", c.predictor_hidden);
    c.predictor_kernel = j.value("predictor_kernel", c.predictor_kernel);
    c.dropout = j.value("dropout", c.dropout);
    c.n_mels = j.value("n_mels", c.n_mels);
    c.min_duration = j.value("min_duration", c.min_duration);
    c.validate();
    return c;
  }
};

// Ground-truth per-phoneme variance values used for teacher forcing.
struct VarianceTargets {
  std::vector<double> pitch;   // log-F0 means, 0 when unvoiced
  std::vector<double> energy;  // frame-energy means
  std::vector<std::size_t> durations;
};

// Two conv layers (ReLU + layer norm + dropout) into a scalar projection;
// shared shape for the duration, pitch and energy predictors.
class VariancePredictor {
 public:
  VariancePredictor() = default;
  VariancePredictor(std::size_t d_model, std::size_t hidden, std::size_t kernel, double dropout_p,
                    Rng& rng)
      : conv1_(d_model, hidden, kernel, rng),
        ln1_(hidden),
        conv2_(hidden, hidden, kernel, rng),
        ln2_(hidden),
        out_(hidden, 1, rng),
        dropout_p_(dropout_p) {}

  // [T x d_model] -> [T x 1]
  nn::Tensor forward(const nn::Tensor& x, const nn::Ctx& ctx) const {
    nn::Tensor h = nn::dropout(ln1_.forward(nn::relu(conv1_.forward(x))), dropout_p_,
                               ctx.training, ctx.rng);
    h = nn::dropout(ln2_.forward(nn::relu(conv2_.forward(h))), dropout_p_, ctx.training, ctx.rng);
    return out_.forward(h);
  }

  void params(nn::ParamMap& pm, const std::string& prefix) const {
    conv1_.params(pm, prefix + ".conv1");
    ln1_.params(pm, prefix + ".ln1");
    conv2_.params(pm, prefix + ".conv2");
    ln2_.params(pm, prefix + ".ln2");
    out_.params(pm, prefix + ".out");
  }

 private:
  nn::Conv1dLayer conv1_;
  nn::LayerNormModule ln1_;
  nn::Conv1dLayer conv2_;
  nn::LayerNormModule ln2_;
  nn::Linear out_;
  double dropout_p_ = 0.0;
};

struct VarianceAdaptOut {
  nn::Tensor frame_hidden;   // [sum(durations) x d_model]
  nn::Tensor log_dur_pred;   // [T x 1], log(frames + 1) domain
  nn::Tensor pitch_pred;     // [T x 1]
  nn::Tensor energy_pred;    // [T x 1]
  std::vector<std::size_t> durations;  // the ones actually used
};

inline nn::Tensor column_tensor(const std::vector<double>& v) {
  return nn::Tensor::make({v.size(), 1}, v);
}

class AcousticModel {
 public:
  AcousticModel() = default;

  AcousticModel(const AcousticConfig& cfg, std::size_t vocab_size, Rng& rng)
      : cfg_(cfg), vocab_size_(vocab_size), emb_(vocab_size, cfg.d_model, rng) {
    cfg_.validate();
    for (std::size_t i = 0; i < cfg.encoder_layers; ++i)
      encoder_.emplace_back(cfg.d_model, cfg.heads, cfg.ffn_hidden, cfg.ffn_kernel, cfg.dropout,
                            rng);
    for (std::size_t i = 0; i < cfg.decoder_layers; ++i)
      decoder_.emplace_back(cfg.d_model, cfg.heads, cfg.ffn_hidden, cfg.ffn_kernel, cfg.dropout,
                            rng);
    dur_pred_ = VariancePredictor(cfg.d_model, cfg.predictor_hidden, cfg.predictor_kernel,
                                  cfg.dropout, rng);
    pitch_pred_ = VariancePredictor(cfg.d_model, cfg.predictor_hidden, cfg.predictor_kernel,
                                    cfg.dropout, rng);
    energy_pred_ = VariancePredictor(cfg.d_model, cfg.predictor_hidden, cfg.predictor_kernel,
                                     cfg.dropout, rng);
    pitch_proj_ = nn::Linear(1, cfg.d_model, rng);
    energy_proj_ = nn::Linear(1, cfg.d_model, rng);
    mel_out_ = nn::Linear(cfg.d_model, cfg.n_mels, rng);
  }

  const AcousticConfig& config() const { return cfg_; }
  std::size_t vocab_size() const { return vocab_size_; }

  // Phoneme ids -> hidden sequence [T x d_model]. The optional style vector
  // ([1 x d_model]) is broadcast-added to the input embeddings, so a zero
  // style reproduces the unconditioned path bit-for-bit.
  nn::Tensor encode_text(const std::vector<std::size_t>& ids, const nn::Ctx& ctx,
                         const nn::Tensor* style = nullptr) const {
    if (ids.empty()) throw Error("encode_text: empty phoneme sequence");
    for (std::size_t id : ids)
      if (id >= vocab_size_)
        throw Error("encode_text: phoneme id " + std::to_string(id) +
                    " outside vocabulary of size " + std::to_string(vocab_size_));
    nn::Tensor x = emb_.forward(ids);
    if (style != nullptr) {
      if (style->numel() != cfg_.d_model)
        throw Error("style embedding dimension " + std::to_string(style->numel()) +
                    " != d_model " + std::to_string(cfg_.d_model));
      nn::Tensor style_row = style->rank() == 1 ? *style : nn::reshape(*style, {cfg_.d_model});
      x = nn::add_rowvec(x, style_row);
    }
    x = nn::add(x, nn::positional_encoding(ids.size(), cfg_.d_model));
    for (const auto& block : encoder_) x = block.forward(x, ctx);
    return x;
  }

  // Teacher-forced when targets are given (ground-truth durations drive the
  // length regulator, ground-truth pitch/energy drive the conditioning);
  // otherwise predictions drive everything. Predictions always come from the
  // unconditioned hidden, so train and inference predictors see the same view.
  VarianceAdaptOut variance_adapt(const nn::Tensor& hidden, const nn::Ctx& ctx,
                                  const VarianceTargets* targets = nullptr) const {
    const std::size_t t_len = hidden.dim(0);
    VarianceAdaptOut out;
    out.log_dur_pred = dur_pred_.forward(hidden, ctx);
    out.pitch_pred = pitch_pred_.forward(hidden, ctx);
    out.energy_pred = energy_pred_.forward(hidden, ctx);

    nn::Tensor pitch_in, energy_in;
    if (targets != nullptr) {
      if (targets->pitch.size() != t_len || targets->energy.size() != t_len ||
          targets->durations.size() != t_len)
        throw Error("variance targets length mismatch: hidden has " + std::to_string(t_len) +
                    " phonemes");
      out.durations = targets->durations;
      pitch_in = column_tensor(targets->pitch);
      energy_in = column_tensor(targets->energy);
    } else {
      out.durations.resize(t_len);
      for (std::size_t i = 0; i < t_len; ++i) {
        const double frames = std::exp(out.log_dur_pred.data()[i]) - 1.0;
        const long long rounded = std::llround(frames);
        out.durations[i] = static_cast<std::size_t>(
            std::max<long long>(rounded, static_cast<long long>(cfg_.min_duration)));
      }
      pitch_in = out.pitch_pred;
      energy_in = out.energy_pred;
    }

    nn::Tensor conditioned = nn::add(hidden, pitch_proj_.forward(pitch_in));
    conditioned = nn::add(conditioned, energy_proj_.forward(energy_in));
    out.frame_hidden = nn::repeat_rows(conditioned, out.durations);
    return out;
  }

  // Frame-level hidden -> [frames x n_mels] log-mel prediction.
  nn::Tensor decode_mel(const nn::Tensor& frame_hidden, const nn::Ctx& ctx) const {
    if (frame_hidden.dim(0) == 0) throw Error("decode_mel: empty frame sequence");
    nn::Tensor x = nn::add(frame_hidden, nn::positional_encoding(frame_hidden.dim(0), cfg_.d_model));
    for (const auto& block : decoder_) x = block.forward(x, ctx);
    return mel_out_.forward(x);
  }

  void params(nn::ParamMap& pm, const std::string& prefix = "acoustic") const {
    emb_.params(pm, prefix + ".emb");
    for (std::size_t i = 0; i < encoder_.size(); ++i)
      encoder_[i].params(pm, prefix + ".enc" + std::to_string(i));
    for (std::size_t i = 0; i < decoder_.size(); ++i)
      decoder_[i].params(pm, prefix + ".dec" + std::to_string(i));
    dur_pred_.params(pm, prefix + ".dur");
    pitch_pred_.params(pm, prefix + ".pitch");
    energy_pred_.params(pm, prefix + ".energy");
    pitch_proj_.params(pm, prefix + ".pitch_proj");
    energy_proj_.params(pm, prefix + ".energy_proj");
    mel_out_.params(pm, prefix + ".mel_out");
  }

 private:
  AcousticConfig cfg_;
  std::size_t vocab_size_ = 0;
  nn::EmbeddingTable emb_;
  std::vector<nn::FftBlock> encoder_, decoder_;
  VariancePredictor dur_pred_, pitch_pred_, energy_pred_;
  nn::Linear pitch_proj_, energy_proj_;
  nn::Linear mel_out_;
};

// Standalone length regulator (the model uses the same primitive internally).
inline nn::Tensor length_regulate(const nn::Tensor& hidden,
                                  const std::vector<std::size_t>& durations) {
  if (durations.size() != hidden.dim(0))
    throw Error("length_regulate: " + std::to_string(durations.size()) + " durations for " +
                std::to_string(hidden.dim(0)) + " phonemes");
  return nn::repeat_rows(hidden, durations);
}

struct StageILoss {
  nn::Tensor total;
  double mel_l1 = 0.0;
  double duration_mse = 0.0;
  double pitch_mse = 0.0;
  double energy_mse = 0.0;
};

// total = L1(mel) + MSE(log-duration) + MSE(pitch) + MSE(energy).
// Duration targets live in log(frames + 1) to match the predictor domain.
inline StageILoss stage1_loss(const nn::Tensor& mel_pred, const nn::Tensor& mel_target,
                              const VarianceAdaptOut& var, const VarianceTargets& targets) {
  if (mel_pred.shape() != mel_target.shape())
    throw Error("stage1_loss: mel shape mismatch " + nn::shape_str(mel_pred.shape()) + " vs " +
                nn::shape_str(mel_target.shape()));
  const std::size_t t_len = targets.durations.size();
  if (targets.pitch.size() != t_len || targets.energy.size() != t_len)
    throw Error("stage1_loss: variance target lengths disagree");

  std::vector<double> log_dur(t_len);
  for (std::size_t i = 0; i < t_len; ++i)
    log_dur[i] = std::log(static_cast<double>(targets.durations[i]) + 1.0);

  StageILoss out;
  nn::Tensor mel_term = nn::l1_loss(mel_pred, mel_target);
  nn::Tensor dur_term = nn::mse_loss(var.log_dur_pred, column_tensor(log_dur));
  nn::Tensor pitch_term = nn::mse_loss(var.pitch_pred, column_tensor(targets.pitch));
  nn::Tensor energy_term = nn::mse_loss(var.energy_pred, column_tensor(targets.energy));
  out.mel_l1 = mel_term.item();
  out.duration_mse = dur_term.item();
  out.pitch_mse = pitch_term.item();
  out.energy_mse = energy_term.item();
  out.total = nn::add(nn::add(mel_term, dur_term), nn::add(pitch_term, energy_term));
  return out;
}

}  // namespace temotts::acoustic
