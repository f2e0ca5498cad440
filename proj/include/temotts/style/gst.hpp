#pragma once

// Global style tokens: a reference encoder that summarizes a mel-spectrogram
// into a fixed-size vector, scaled-dot-product attention over a bank of 16
// learned tokens producing simplex weights, and the weighted tanh-token
// combination used to condition the acoustic encoder. The weights themselves
// are the quantity stage II regresses.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/audio/mel.hpp"
#include "temotts/core/nn.hpp"
#include "temotts/core/tensor.hpp"

namespace temotts::style {

struct StyleConfig {
  std::size_t n_tokens = 16;
  std::size_t d_style = 256;  // must equal acoustic d_model
  std::size_t heads = 1;      // 1 keeps extracted weights == conditioning weights
  bool token_tanh = true;
  std::vector<std::size_t> ref_channels = {32, 32, 64, 64, 128, 128};
  std::size_t ref_kernel = 3;
  std::size_t ref_stride = 2;
  std::size_t n_mels = 80;
  std::size_t min_ref_frames = 0;  // 0: derive as 2^len(ref_channels)

  static StyleConfig toy() {
    StyleConfig c;
    c.d_style = 32;
    c.ref_channels = {4, 4, 8};
    return c;
  }

  std::size_t min_frames() const {
    if (min_ref_frames != 0) return min_ref_frames;
    return std::size_t{1} << ref_channels.size();
  }

  void validate() const {
    if (n_tokens == 0) throw Error("style config: n_tokens must be positive");
    if (d_style == 0 || d_style % heads != 0)
      throw Error("style config: d_style must be a positive multiple of heads");
    if (ref_channels.empty()) throw Error("style config: reference encoder needs conv layers");
  }

  nlohmann::json to_json() const {
    return {{"n_tokens", n_tokens},       {"d_style", d_style},
            {"heads", heads},             {"token_tanh", token_tanh},
            {"ref_channels", ref_channels}, {"ref_kernel", ref_kernel},
            {"ref_stride", ref_stride},   {"n_mels", n_mels},
            {"min_ref_frames", min_ref_frames}};
  }

  static StyleConfig from_json(const nlohmann::json& j) {
    StyleConfig c;
    c.n_tokens = j.value("n_tokens", c.n_tokens);
    c.d_style = j.value("d_style", c.d_style);
    c.heads = j.value("heads", c.heads);
    c.token_tanh = j.value("token_tanh", c.token_tanh);
    c.ref_channels = j.value("ref_channels", c.ref_channels);
    c.ref_kernel = j.value("ref_kernel", c.ref_kernel);
    c.ref_stride = j.value("ref_stride", c.ref_stride);
    c.n_mels = j.value("n_mels", c.n_mels);
    c.min_ref_frames = j.value("min_ref_frames", c.min_ref_frames);
    c.validate();
    return c;
  }
};

namespace detail {

// [C x H x W] -> [H x C*W]: turns the conv stack's output into a time-major
// sequence for the recurrent summarizer.
inline nn::Tensor time_major_flatten(const nn::Tensor& x) {
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  std::vector<double> v(c * h * w);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t hi = 0; hi < h; ++hi)
      for (std::size_t wi = 0; wi < w; ++wi)
        v[hi * (c * w) + ci * w + wi] = x.data()[ci * h * w + hi * w + wi];

  auto n = std::make_shared<nn::Node>();
  n->shape = {h, c * w};
  n->value = std::move(v);
  if (x.requires_grad()) {
    n->requires_grad = true;
    n->parents = {x.node()};
    n->backward = [c, h, w](nn::Node& self) {
      nn::Node& pa = *self.parents[0];
      pa.ensure_grad();
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t hi = 0; hi < h; ++hi)
          for (std::size_t wi = 0; wi < w; ++wi)
            pa.grad[ci * h * w + hi * w + wi] += self.grad[hi * (c * w) + ci * w + wi];
    };
  }
  return nn::Tensor(n);
}

}  // namespace detail

class GstModel {
 public:
  GstModel() = default;

  GstModel(const StyleConfig& cfg, Rng& rng) : cfg_(cfg) {
    cfg_.validate();
    tokens_ = nn::Tensor::randn({cfg.n_tokens, cfg.d_style}, rng,
                                1.0 / std::sqrt(static_cast<double>(cfg.d_style)), true);
    std::size_t in_ch = 1;
    std::size_t width = cfg.n_mels;
    const std::size_t pad = cfg.ref_kernel / 2;
    for (std::size_t out_ch : cfg.ref_channels) {
      convs_.emplace_back(in_ch, out_ch, cfg.ref_kernel, cfg.ref_stride, pad, rng);
      width = nn::conv_out_len(width, cfg.ref_kernel, cfg.ref_stride, pad);
      in_ch = out_ch;
    }
    gru_ = nn::Gru(in_ch * width, cfg.d_style, rng);
  }

  const StyleConfig& config() const { return cfg_; }
  const nn::Tensor& token_bank() const { return tokens_; }

  // Mel [frames x n_mels] -> fixed-size reference embedding [1 x d_style].
  nn::Tensor encode_reference(const audio::MelSpectrogram& mel) const {
    if (mel.empty()) throw Error("encode_reference: empty mel");
    if (mel.n_mels != cfg_.n_mels)
      throw Error("encode_reference: mel has " + std::to_string(mel.n_mels) + " bins, expected " +
                  std::to_string(cfg_.n_mels));
    if (mel.frames < cfg_.min_frames())
      throw Error("reference too short: " + std::to_string(mel.frames) + " frames, need at least " +
                  std::to_string(cfg_.min_frames()));
    nn::Tensor x = nn::Tensor::make({1, mel.frames, mel.n_mels}, mel.values);
    for (const auto& conv : convs_) x = nn::relu(conv.forward(x));
    return gru_.forward(detail::time_major_flatten(x));
  }

  // Scaled-dot-product attention of the reference query against the token
  // keys; no extra projections (d_token == d_style). With several heads the
  // per-head distributions are averaged and renormalized so the result stays
  // one 16-dim simplex.
  nn::Tensor attend_tokens(const nn::Tensor& ref) const {
    if (ref.numel() != cfg_.d_style)
      throw Error("attend_tokens: reference dimension " + std::to_string(ref.numel()) +
                  " != d_style " + std::to_string(cfg_.d_style));
    nn::Tensor query = ref.rank() == 2 ? ref : nn::reshape(ref, {1, cfg_.d_style});
    nn::Tensor keys = cfg_.token_tanh ? nn::tanh_t(tokens_) : tokens_;

    const std::size_t dh = cfg_.d_style / cfg_.heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    if (cfg_.heads == 1) {
      return nn::softmax_rows(nn::scale(nn::matmul(query, nn::transpose(keys)), inv_sqrt));
    }
    nn::Tensor acc;
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
      nn::Tensor qh = nn::slice_cols(query, h * dh, (h + 1) * dh);
      nn::Tensor kh = nn::slice_cols(keys, h * dh, (h + 1) * dh);
      nn::Tensor dist = nn::softmax_rows(nn::scale(nn::matmul(qh, nn::transpose(kh)), inv_sqrt));
      acc = h == 0 ? dist : nn::add(acc, dist);
    }
    acc = nn::scale(acc, 1.0 / static_cast<double>(cfg_.heads));
    // Renormalize: the mean of simplexes already sums to 1 up to rounding,
    // this pins it.
    nn::Tensor denom = nn::sum_all(acc);
    return nn::scale(acc, 1.0 / denom.item());
  }

  // weights [1 x n_tokens] -> style embedding [1 x d_style].
  nn::Tensor combine_tokens(const nn::Tensor& weights) const {
    if (weights.numel() != cfg_.n_tokens)
      throw Error("combine_tokens: expected " + std::to_string(cfg_.n_tokens) + " weights, got " +
                  std::to_string(weights.numel()));
    nn::Tensor w_row = weights.rank() == 2 ? weights : nn::reshape(weights, {1, cfg_.n_tokens});
    nn::Tensor keys = cfg_.token_tanh ? nn::tanh_t(tokens_) : tokens_;
    return nn::matmul(w_row, keys);
  }

  // Full conditioning path used in stage-I training: style from the
  // utterance's own ground-truth mel.
  nn::Tensor style_from_mel(const audio::MelSpectrogram& mel) const {
    return combine_tokens(attend_tokens(encode_reference(mel)));
  }

  // Stage-II target generator (eval-mode composition, values only).
  std::vector<double> extract_weights(const audio::MelSpectrogram& mel) const {
    return attend_tokens(encode_reference(mel)).data();
  }

  std::vector<std::vector<double>> extract_weights_batch(
      const std::vector<const audio::MelSpectrogram*>& mels) const {
    std::vector<std::vector<double>> out;
    out.reserve(mels.size());
    for (const auto* m : mels) out.push_back(extract_weights(*m));
    return out;
  }

  // Portable token-bank dump for inspection: one token per line, tab-separated.
  void export_token_bank(const std::filesystem::path& path) const {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for writing: " + path.string());
    os.precision(17);
    for (std::size_t i = 0; i < cfg_.n_tokens; ++i) {
      for (std::size_t j = 0; j < cfg_.d_style; ++j) {
        if (j) os << '\t';
        os << tokens_.at(i, j);
      }
      os << '\n';
    }
    if (!os) throw Error("write failed: " + path.string());
  }

  void params(nn::ParamMap& pm, const std::string& prefix = "style") const {
    pm.add(prefix + ".tokens", tokens_);
    for (std::size_t i = 0; i < convs_.size(); ++i)
      convs_[i].params(pm, prefix + ".ref.conv" + std::to_string(i));
    gru_.params(pm, prefix + ".ref.gru");
  }

 private:
  StyleConfig cfg_;
  nn::Tensor tokens_;
  std::vector<nn::Conv2dLayer> convs_;
  nn::Gru gru_;
};

}  // namespace temotts::style
