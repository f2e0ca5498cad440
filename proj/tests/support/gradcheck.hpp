#pragma once

// Central-difference gradient checks shared by the autograd tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "temotts/core/random.hpp"
#include "temotts/core/tensor.hpp"

namespace testsupport {

// Max relative error between analytic and finite-difference gradients over
// every element of every leaf. `fn` must rebuild the graph from the leaves on
// each call (define-by-run); leaf data is perturbed in place.
inline double max_grad_error(
    std::vector<temotts::nn::Tensor>& leaves,
    const std::function<temotts::nn::Tensor(std::vector<temotts::nn::Tensor>&)>& fn,
    double h = 1e-5) {
  using temotts::nn::Tensor;
  for (auto& l : leaves) l.grad().assign(l.numel(), 0.0);
  Tensor loss = fn(leaves);
  loss.backward();
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& l : leaves) analytic.push_back(l.grad());

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    for (std::size_t i = 0; i < leaves[li].numel(); ++i) {
      double& x = leaves[li].data()[i];
      const double keep = x;
      x = keep + h;
      const double up = fn(leaves).item();
      x = keep - h;
      const double dn = fn(leaves).item();
      x = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = analytic[li][i];
      const double err = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1.0});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// Directional derivative check: compares <grad, d> for a random unit
// direction d over all parameters with the central difference of the loss
// along d. Returns the relative error.
inline double direction_grad_error(std::vector<temotts::nn::Tensor>& params,
                                   const std::function<temotts::nn::Tensor()>& loss_fn,
                                   temotts::Rng& rng, double h = 1e-5) {
  using temotts::nn::Tensor;
  for (auto& p : params) p.grad().assign(p.numel(), 0.0);
  Tensor loss = loss_fn();
  loss.backward();

  std::vector<std::vector<double>> dir(params.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    dir[i].resize(params[i].numel());
    for (auto& d : dir[i]) {
      d = rng.normal();
      norm += d * d;
    }
  }
  norm = std::sqrt(norm);

  double analytic = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i].numel(); ++j) {
      dir[i][j] /= norm;
      analytic += params[i].grad()[j] * dir[i][j];
    }

  const auto shift = [&](double s) {
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].numel(); ++j) params[i].data()[j] += s * dir[i][j];
  };
  shift(h);
  const double up = loss_fn().item();
  shift(-2.0 * h);
  const double dn = loss_fn().item();
  shift(h);

  const double fd = (up - dn) / (2.0 * h);
  return std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
}

// Random projection loss: sum(t * r) for a fixed random tensor r, so that
// symmetric gradients cannot cancel in the scalar reduction.
inline temotts::nn::Tensor project_loss(const temotts::nn::Tensor& t, const std::vector<double>& r) {
  using temotts::nn::Tensor;
  Tensor proj = Tensor::make(t.shape(), r);
  return temotts::nn::sum_all(temotts::nn::mul(t, proj));
}

inline std::vector<double> random_vec(std::size_t n, temotts::Rng& rng, double lo = -1.0,
                                      double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace testsupport
