#pragma once

#include <cmath>
#include <vector>

#include "temotts/core/nn.hpp"

namespace temotts::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-9;
};

// lr(step) = base_lr * sqrt(warmup) * min(step^-1/2, step * warmup^-3/2).
// Rises linearly to base_lr at step == warmup, then decays as step^-1/2.
inline double noam_lr(std::size_t step, double base_lr, std::size_t warmup_steps) {
  if (step == 0) throw Error("noam_lr: step counts from 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return base_lr * std::sqrt(w) * std::min(1.0 / std::sqrt(s), s / (w * std::sqrt(w)));
}

class Adam {
 public:
  Adam(ParamMap& params, AdamConfig cfg) : params_(&params), cfg_(cfg) {
    m_.resize(params.items.size());
    v_.resize(params.items.size());
    for (std::size_t i = 0; i < params.items.size(); ++i) {
      m_[i].assign(params.items[i].second.numel(), 0.0);
      v_[i].assign(params.items[i].second.numel(), 0.0);
    }
  }

  // Applies one update from the accumulated gradients, then clears them.
  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_->items.size(); ++i) {
      Tensor& p = params_->items[i].second;
      auto& grad = p.grad();
      auto& value = p.data();
      for (std::size_t j = 0; j < value.size(); ++j) {
        m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * grad[j];
        v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * grad[j] * grad[j];
        const double mhat = m_[i][j] / bc1;
        const double vhat = v_[i][j] / bc2;
        value[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
    }
    params_->zero_grad();
  }

  std::size_t steps_taken() const { return t_; }

 private:
  ParamMap* params_;
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace temotts::nn
