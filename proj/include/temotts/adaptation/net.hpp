#pragma once

// Stage-II adaptation network: a fully connected ReLU stack mapping pooled
// emotion text embeddings to GST weight distributions, trained with
// categorical cross-entropy against soft targets extracted from the frozen
// stage-I model.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/nn.hpp"
#include "temotts/core/optim.hpp"
#include "temotts/core/tensor.hpp"

namespace temotts::adaptation {

struct AdaptationConfig {
  // Documented layer plan; the leading 772 is the published input size, but
  // the effective input layer is sized to the provider's actual embedding
  // dimension unless input_dim_override pins it.
  std::vector<std::size_t> layer_sizes = {772, 600, 500, 400, 300, 200, 100, 50, 40, 16};
  std::size_t input_dim_override = 0;  // 0: use the provider dimension

  void validate() const {
    if (layer_sizes.size() < 2) throw Error("adaptation config: need at least input and output");
    for (std::size_t s : layer_sizes)
      if (s == 0) throw Error("adaptation config: layer sizes must be positive");
  }

  std::vector<std::size_t> effective_sizes(std::size_t provider_dim) const {
    validate();
    auto sizes = layer_sizes;
    sizes[0] = input_dim_override != 0 ? input_dim_override : provider_dim;
    return sizes;
  }

  std::size_t output_dim() const { return layer_sizes.back(); }

  nlohmann::json to_json() const {
    return {{"layer_sizes", layer_sizes}, {"input_dim_override", input_dim_override}};
  }

  static AdaptationConfig from_json(const nlohmann::json& j) {
    AdaptationConfig c;
    c.layer_sizes = j.value("layer_sizes", c.layer_sizes);
    c.input_dim_override = j.value("input_dim_override", c.input_dim_override);
    c.validate();
    return c;
  }
};

struct WeightPair {
  std::string id;
  std::vector<double> embedding;
  std::vector<double> target_weights;  // soft label, valid simplex
};

class AdaptationNet {
 public:
  AdaptationNet() = default;

  AdaptationNet(const AdaptationConfig& cfg, std::size_t provider_dim, Rng& rng) : cfg_(cfg) {
    sizes_ = cfg.effective_sizes(provider_dim);
    for (std::size_t i = 0; i + 1 < sizes_.size(); ++i)
      layers_.emplace_back(sizes_[i], sizes_[i + 1], rng);
  }

  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  const AdaptationConfig& config() const { return cfg_; }

  // [B x input_dim] -> [B x n_tokens] raw logits (what the loss consumes).
  nn::Tensor forward_logits(const nn::Tensor& x) const {
    if (x.dim(1) != input_dim())
      throw Error("adaptation net expects embedding dimension " + std::to_string(input_dim()) +
                  ", got " + std::to_string(x.dim(1)));
    nn::Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      h = layers_[i].forward(h);
      if (i + 1 < layers_.size()) h = nn::relu(h);
    }
    return h;
  }

  // Single embedding -> simplex weights (the GSTWeights contract).
  std::vector<double> predict_weights(const std::vector<double>& embedding) const {
    if (embedding.size() != input_dim())
      throw Error("adaptation net expects embedding dimension " + std::to_string(input_dim()) +
                  ", got " + std::to_string(embedding.size()));
    nn::Tensor x = nn::Tensor::make({1, embedding.size()}, embedding);
    return nn::softmax_rows(forward_logits(x)).data();
  }

  void params(nn::ParamMap& pm, const std::string& prefix = "adaptation") const {
    for (std::size_t i = 0; i < layers_.size(); ++i)
      layers_[i].params(pm, prefix + ".fc" + std::to_string(i));
  }

 private:
  AdaptationConfig cfg_;
  std::vector<std::size_t> sizes_;
  std::vector<nn::Linear> layers_;
};

// -sum_i target[i] * log(predicted[i] + eps), eps = 1e-12. Value-level form
// of the training objective; training itself goes through log-softmax.
inline double ce_soft_loss(const std::vector<double>& predicted,
                           const std::vector<double>& target) {
  if (predicted.size() != target.size()) throw Error("ce_soft_loss: size mismatch");
  double loss = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    loss -= target[i] * std::log(predicted[i] + 1e-12);
  return loss;
}

// Mean cross-entropy of a logits batch against soft targets, as a graph node.
inline nn::Tensor ce_soft_batch(const nn::Tensor& logits, const nn::Tensor& targets) {
  if (logits.shape() != targets.shape()) throw Error("ce_soft_batch: shape mismatch");
  nn::Tensor logp = nn::log_softmax_rows(logits);
  return nn::scale(nn::sum_all(nn::mul(targets, logp)),
                   -1.0 / static_cast<double>(logits.dim(0)));
}

struct AdaptationTrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 300;
  std::size_t patience = 30;  // epochs without val improvement before stopping
  double lr = 1e-3;           // constant; stage II trains on a small dataset
  double val_fraction = 0.1;
  std::uint64_t seed = 1234;
  nn::AdamConfig adam;
};

struct EpochLoss {
  double train = 0.0;
  double val = 0.0;
};

struct AdaptationTrainResult {
  AdaptationNet net;  // best-on-validation parameters
  std::vector<EpochLoss> curve;
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  bool diverged = false;
};

namespace detail {

inline nn::Tensor batch_tensor(const std::vector<const WeightPair*>& batch, bool embeddings) {
  const std::size_t cols = embeddings ? batch[0]->embedding.size() : batch[0]->target_weights.size();
  std::vector<double> v;
  v.reserve(batch.size() * cols);
  for (const auto* p : batch) {
    const auto& src = embeddings ? p->embedding : p->target_weights;
    v.insert(v.end(), src.begin(), src.end());
  }
  return nn::Tensor::make({batch.size(), cols}, std::move(v));
}

inline std::vector<double> snapshot(const nn::ParamMap& pm) {
  std::vector<double> v;
  for (const auto& [_, t] : pm.items) v.insert(v.end(), t.data().begin(), t.data().end());
  return v;
}

inline void restore(nn::ParamMap& pm, const std::vector<double>& v) {
  std::size_t pos = 0;
  for (auto& [_, t] : pm.items) {
    std::copy(v.begin() + static_cast<long>(pos), v.begin() + static_cast<long>(pos + t.numel()),
              t.data().begin());
    pos += t.numel();
  }
}

inline double mean_ce(const AdaptationNet& net, const std::vector<const WeightPair*>& pairs) {
  if (pairs.empty()) return 0.0;
  nn::Tensor logits = net.forward_logits(batch_tensor(pairs, true));
  nn::Tensor loss = ce_soft_batch(logits, batch_tensor(pairs, false));
  return loss.item();
}

}  // namespace detail

inline AdaptationTrainResult train_adaptation(const std::vector<WeightPair>& pairs,
                                              const AdaptationConfig& cfg,
                                              const AdaptationTrainConfig& train_cfg = {}) {
  if (pairs.empty()) throw Error("train_adaptation: empty pair list");
  const std::size_t dim = pairs[0].embedding.size();
  const std::size_t n_out = cfg.output_dim();
  for (const auto& p : pairs) {
    if (p.embedding.size() != dim)
      throw Error("train_adaptation: pair '" + p.id + "' has embedding dimension " +
                  std::to_string(p.embedding.size()) + ", expected " + std::to_string(dim));
    if (p.target_weights.size() != n_out)
      throw Error("train_adaptation: pair '" + p.id + "' has " +
                  std::to_string(p.target_weights.size()) + " target weights, expected " +
                  std::to_string(n_out));
  }

  Rng rng(train_cfg.seed);
  AdaptationTrainResult res;
  res.net = AdaptationNet(cfg, dim, rng);

  nn::ParamMap pm;
  res.net.params(pm);
  nn::Adam opt(pm, train_cfg.adam);

  // Hold out a validation slice; tiny datasets validate on the train set
  // itself rather than losing examples.
  std::vector<const WeightPair*> all;
  all.reserve(pairs.size());
  for (const auto& p : pairs) all.push_back(&p);
  Rng split_rng = rng.derive("valsplit");
  std::vector<const WeightPair*> train_set = all, val_set;
  if (pairs.size() >= 5) {
    split_rng.shuffle(train_set);
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(train_cfg.val_fraction *
                                                 static_cast<double>(pairs.size()))));
    val_set.assign(train_set.end() - static_cast<long>(n_val), train_set.end());
    train_set.resize(train_set.size() - n_val);
  } else {
    val_set = all;
  }

  std::vector<double> best_params = detail::snapshot(pm);
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < train_cfg.max_epochs; ++epoch) {
    rng.shuffle(train_set);
    double train_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < train_set.size(); start += train_cfg.batch_size) {
      const std::size_t end = std::min(start + train_cfg.batch_size, train_set.size());
      std::vector<const WeightPair*> batch(train_set.begin() + static_cast<long>(start),
                                           train_set.begin() + static_cast<long>(end));
      nn::Tensor logits = res.net.forward_logits(detail::batch_tensor(batch, true));
      nn::Tensor loss = ce_soft_batch(logits, detail::batch_tensor(batch, false));
      const double loss_v = loss.item();
      if (!std::isfinite(loss_v)) {
        log::warn("adaptation training diverged at epoch " + std::to_string(epoch) +
                  "; keeping best checkpoint");
        res.diverged = true;
        detail::restore(pm, best_params);
        return res;
      }
      pm.zero_grad();
      loss.backward();
      opt.step(train_cfg.lr);
      train_sum += loss_v * static_cast<double>(batch.size());
      seen += batch.size();
    }

    EpochLoss el;
    el.train = seen ? train_sum / static_cast<double>(seen) : 0.0;
    el.val = detail::mean_ce(res.net, val_set);
    res.curve.push_back(el);

    if (!std::isfinite(el.val)) {
      log::warn("adaptation validation diverged at epoch " + std::to_string(epoch));
      res.diverged = true;
      detail::restore(pm, best_params);
      return res;
    }

    if (el.val < res.best_val - 1e-12) {
      res.best_val = el.val;
      res.best_epoch = epoch;
      best_params = detail::snapshot(pm);
      since_best = 0;
    } else if (++since_best > train_cfg.patience) {
      break;
    }
  }

  detail::restore(pm, best_params);
  return res;
}

}  // namespace temotts::adaptation
