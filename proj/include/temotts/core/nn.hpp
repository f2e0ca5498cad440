#pragma once

// Neural-net building blocks on top of the autograd tensor: linear layers,
// embeddings, layer norm, 1-D/2-D convolutions, a GRU, multi-head
// self-attention and the feed-forward transformer block used by the
// acoustic model.

#include <cmath>
#include <string>
#include <vector>

#include "temotts/core/tensor.hpp"

namespace temotts::nn {

// Named parameter registry. Registration order is deterministic and shared by
// the optimizer and the checkpoint serializer.
struct ParamMap {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(const std::string& name, const Tensor& t) {
    for (const auto& [n, _] : items)
      if (n == name) throw Error("duplicate parameter name: " + name);
    items.emplace_back(name, t);
  }

  Tensor* find(const std::string& name) {
    for (auto& [n, t] : items)
      if (n == name) return &t;
    return nullptr;
  }

  std::size_t total_size() const {
    std::size_t n = 0;
    for (const auto& [_, t] : items) n += t.numel();
    return n;
  }

  void zero_grad() {
    for (auto& [_, t] : items) t.node()->zero_grad();
  }
};

// Forward-pass context: training toggles dropout, rng drives the masks.
struct Ctx {
  bool training = false;
  Rng* rng = nullptr;

  static Ctx eval() { return Ctx{}; }
  static Ctx train(Rng& rng) { return Ctx{true, &rng}; }
};

inline Tensor init_weight(Shape shape, std::size_t fan_in, Rng& rng) {
  return Tensor::randn(std::move(shape), rng, 1.0 / std::sqrt(static_cast<double>(fan_in)), true);
}

class Linear {
 public:
  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng)
      : w_(init_weight({in, out}, in, rng)), b_(Tensor::zeros({out}, true)) {}

  Tensor forward(const Tensor& x) const { return add_rowvec(matmul(x, w_), b_); }

  std::size_t in_dim() const { return w_.dim(0); }
  std::size_t out_dim() const { return w_.dim(1); }

  void params(ParamMap& pm, const std::string& prefix) const {
    pm.add(prefix + ".w", w_);
    pm.add(prefix + ".b", b_);
  }

 private:
  Tensor w_, b_;
};

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t vocab, std::size_t dim, Rng& rng)
      : w_(init_weight({vocab, dim}, dim, rng)) {}

  Tensor forward(const std::vector<std::size_t>& ids) const { return gather_rows(w_, ids); }

  std::size_t vocab_size() const { return w_.dim(0); }

  void params(ParamMap& pm, const std::string& prefix) const { pm.add(prefix + ".w", w_); }

 private:
  Tensor w_;
};

class LayerNormModule {
 public:
  LayerNormModule() = default;
  explicit LayerNormModule(std::size_t dim)
      : gamma_(Tensor::full({dim}, 1.0, true)), beta_(Tensor::zeros({dim}, true)) {}

  Tensor forward(const Tensor& x) const { return layer_norm(x, gamma_, beta_); }

  void params(ParamMap& pm, const std::string& prefix) const {
    pm.add(prefix + ".gamma", gamma_);
    pm.add(prefix + ".beta", beta_);
  }

 private:
  Tensor gamma_, beta_;
};

class Conv1dLayer {
 public:
  Conv1dLayer() = default;
  Conv1dLayer(std::size_t in, std::size_t out, std::size_t kernel, Rng& rng)
      : w_(init_weight({out, in, kernel}, in * kernel, rng)), b_(Tensor::zeros({out}, true)) {}

  Tensor forward(const Tensor& x) const { return conv1d_same(x, w_, b_); }

  void params(ParamMap& pm, const std::string& prefix) const {
    pm.add(prefix + ".w", w_);
    pm.add(prefix + ".b", b_);
  }

 private:
  Tensor w_, b_;
};

class Conv2dLayer {
 public:
  Conv2dLayer() = default;
  Conv2dLayer(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
              std::size_t pad, Rng& rng)
      : w_(init_weight({out, in, kernel, kernel}, in * kernel * kernel, rng)),
        b_(Tensor::zeros({out}, true)),
        stride_(stride),
        pad_(pad) {}

  Tensor forward(const Tensor& x) const { return conv2d(x, w_, b_, stride_, pad_); }

  void params(ParamMap& pm, const std::string& prefix) const {
    pm.add(prefix + ".w", w_);
    pm.add(prefix + ".b", b_);
  }

 private:
  Tensor w_, b_;
  std::size_t stride_ = 1, pad_ = 0;
};

// Single-layer GRU; forward consumes a [T x in] sequence and returns the final
// hidden state [1 x hidden].
class Gru {
 public:
  Gru() = default;
  Gru(std::size_t in, std::size_t hidden, Rng& rng)
      : wx_(init_weight({in, 3 * hidden}, in, rng)),
        wh_(init_weight({hidden, 3 * hidden}, hidden, rng)),
        bx_(Tensor::zeros({3 * hidden}, true)),
        bh_(Tensor::zeros({3 * hidden}, true)),
        hidden_(hidden) {}

  Tensor forward(const Tensor& seq) const {
    const std::size_t t_len = seq.dim(0);
    const std::size_t h = hidden_;
    Tensor state = Tensor::zeros({1, h});
    for (std::size_t t = 0; t < t_len; ++t) {
      Tensor x_t = slice_rows(seq, t, t + 1);
      Tensor gx = add_rowvec(matmul(x_t, wx_), bx_);
      Tensor gh = add_rowvec(matmul(state, wh_), bh_);
      Tensor r = sigmoid(add(slice_cols(gx, 0, h), slice_cols(gh, 0, h)));
      Tensor z = sigmoid(add(slice_cols(gx, h, 2 * h), slice_cols(gh, h, 2 * h)));
      Tensor n = tanh_t(add(slice_cols(gx, 2 * h, 3 * h), mul(r, slice_cols(gh, 2 * h, 3 * h))));
      // h' = (1 - z) * n + z * h
      Tensor one_minus_z = sub(Tensor::full({1, h}, 1.0), z);
      state = add(mul(one_minus_z, n), mul(z, state));
    }
    return state;
  }

  std::size_t hidden_size() const { return hidden_; }

  void params(ParamMap& pm, const std::string& prefix) const {
    pm.add(prefix + ".wx", wx_);
    pm.add(prefix + ".wh", wh_);
    pm.add(prefix + ".bx", bx_);
    pm.add(prefix + ".bh", bh_);
  }

 private:
  Tensor wx_, wh_, bx_, bh_;
  std::size_t hidden_ = 0;
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(std::size_t d_model, std::size_t heads, Rng& rng)
      : wq_(d_model, d_model, rng),
        wk_(d_model, d_model, rng),
        wv_(d_model, d_model, rng),
        wo_(d_model, d_model, rng),
        heads_(heads),
        d_model_(d_model) {
    if (d_model % heads != 0) throw Error("attention: d_model must be divisible by head count");
  }

  Tensor forward(const Tensor& x, const Ctx& ctx, double dropout_p) const {
    const std::size_t dh = d_model_ / heads_;
    Tensor q = wq_.forward(x), k = wk_.forward(x), v = wv_.forward(x);
    std::vector<Tensor> head_outs;
    head_outs.reserve(heads_);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::size_t hh = 0; hh < heads_; ++hh) {
      Tensor qh = slice_cols(q, hh * dh, (hh + 1) * dh);
      Tensor kh = slice_cols(k, hh * dh, (hh + 1) * dh);
      Tensor vh = slice_cols(v, hh * dh, (hh + 1) * dh);
      Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      Tensor attn = softmax_rows(scores);
      attn = dropout(attn, dropout_p, ctx.training, ctx.rng);
      head_outs.push_back(matmul(attn, vh));
    }
    return wo_.forward(heads_ == 1 ? head_outs[0] : concat_cols(head_outs));
  }

  void params(ParamMap& pm, const std::string& prefix) const {
    wq_.params(pm, prefix + ".wq");
    wk_.params(pm, prefix + ".wk");
    wv_.params(pm, prefix + ".wv");
    wo_.params(pm, prefix + ".wo");
  }

 private:
  Linear wq_, wk_, wv_, wo_;
  std::size_t heads_ = 1, d_model_ = 0;
};

// Feed-forward transformer block: post-norm self-attention followed by a
// two-layer 1-D convolutional feed-forward, both with residual connections.
class FftBlock {
 public:
  FftBlock() = default;
  FftBlock(std::size_t d_model, std::size_t heads, std::size_t ffn_hidden, std::size_t kernel,
           double dropout_p, Rng& rng)
      : attn_(d_model, heads, rng),
        ln1_(d_model),
        conv1_(d_model, ffn_hidden, kernel, rng),
        conv2_(ffn_hidden, d_model, kernel, rng),
        ln2_(d_model),
        dropout_p_(dropout_p) {}

  Tensor forward(const Tensor& x, const Ctx& ctx) const {
    Tensor a = attn_.forward(x, ctx, dropout_p_);
    a = dropout(a, dropout_p_, ctx.training, ctx.rng);
    Tensor h = ln1_.forward(add(x, a));
    Tensor f = conv2_.forward(relu(conv1_.forward(h)));
    f = dropout(f, dropout_p_, ctx.training, ctx.rng);
    return ln2_.forward(add(h, f));
  }

  void params(ParamMap& pm, const std::string& prefix) const {
    attn_.params(pm, prefix + ".attn");
    ln1_.params(pm, prefix + ".ln1");
    conv1_.params(pm, prefix + ".ffn.conv1");
    conv2_.params(pm, prefix + ".ffn.conv2");
    ln2_.params(pm, prefix + ".ln2");
  }

 private:
  MultiHeadSelfAttention attn_;
  LayerNormModule ln1_;
  Conv1dLayer conv1_, conv2_;
  LayerNormModule ln2_;
  double dropout_p_ = 0.0;
};

// Sinusoidal positional encoding as a constant [T x d] tensor.
inline Tensor positional_encoding(std::size_t t_len, std::size_t d_model) {
  std::vector<double> v(t_len * d_model);
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t i = 0; i < d_model; ++i) {
      const double angle =
          static_cast<double>(t) /
          std::pow(10000.0, 2.0 * static_cast<double>(i / 2) / static_cast<double>(d_model));
      v[t * d_model + i] = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  return Tensor::make({t_len, d_model}, std::move(v));
}

}  // namespace temotts::nn
