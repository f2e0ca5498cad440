#pragma once

// Exact (O(N^2)) t-distributed stochastic neighbor embedding for the
// style-space / text-embedding visualization. Fully deterministic for a fixed
// seed: seeded Gaussian init, fixed iteration order, no sampling.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "temotts/core/common.hpp"
#include "temotts/core/random.hpp"

namespace temotts::eval {

struct TsneConfig {
  double perplexity = 30.0;  // effective value capped at (N-1)/3
  std::size_t iterations = 500;
  double learning_rate = 100.0;
  double early_exaggeration = 12.0;
  std::size_t exaggeration_iters = 100;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::size_t momentum_switch = 250;
  std::uint64_t seed = 0;
};

namespace detail {

// Conditional distribution row with the precision tuned so the entropy hits
// log(perplexity); standard bisection on beta = 1/(2 sigma^2).
inline void tune_row(const std::vector<double>& d2_row, std::size_t self, double log_perp,
                     std::vector<double>& p_row) {
  const std::size_t n = d2_row.size();
  double beta = 1.0, beta_lo = -1.0, beta_hi = -1.0;
  for (int iter = 0; iter < 64; ++iter) {
    double sum = 0.0, dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == self) {
        p_row[j] = 0.0;
        continue;
      }
      const double w = std::exp(-beta * d2_row[j]);
      p_row[j] = w;
      sum += w;
      dot += w * d2_row[j];
    }
    if (sum <= 0.0) sum = 1e-300;
    const double entropy = std::log(sum) + beta * dot / sum;
    for (std::size_t j = 0; j < n; ++j) p_row[j] /= sum;
    const double diff = entropy - log_perp;
    if (std::abs(diff) < 1e-7) return;
    if (diff > 0) {
      beta_lo = beta;
      beta = beta_hi < 0 ? beta * 2.0 : 0.5 * (beta + beta_hi);
    } else {
      beta_hi = beta;
      beta = beta_lo < 0 ? beta / 2.0 : 0.5 * (beta + beta_lo);
    }
  }
}

}  // namespace detail

inline std::vector<std::array<double, 2>> tsne_project(
    const std::vector<std::vector<double>>& points, const TsneConfig& cfg = {}) {
  const std::size_t n = points.size();
  if (n < 5) throw Error("tsne: need at least 5 points, got " + std::to_string(n));
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw Error("tsne: ragged input rows");

  // Pairwise squared distances.
  std::vector<double> d2(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double d = points[i][k] - points[j][k];
        s += d * d;
      }
      d2[i * n + j] = d2[j * n + i] = s;
    }

  const double perp = std::min(cfg.perplexity, std::max(2.0, (static_cast<double>(n) - 1.0) / 3.0));
  const double log_perp = std::log(perp);

  // Symmetrized joint distribution.
  std::vector<double> p(n * n, 0.0);
  {
    std::vector<double> row(n), cond(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) row[j] = d2[i * n + j];
      std::vector<double> p_row(n, 0.0);
      detail::tune_row(row, i, log_perp, p_row);
      for (std::size_t j = 0; j < n; ++j) cond[i * n + j] = p_row[j];
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        p[i * n + j] =
            std::max((cond[i * n + j] + cond[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
  }

  Rng rng(cfg.seed);
  std::vector<std::array<double, 2>> y(n), dy(n, {0.0, 0.0}), gains(n, {1.0, 1.0});
  for (auto& yi : y) yi = {rng.normal(0.0, 1e-4), rng.normal(0.0, 1e-4)};

  std::vector<double> num(n * n, 0.0);
  for (std::size_t iter = 0; iter < cfg.iterations; ++iter) {
    const double exaggeration = iter < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double momentum =
        iter < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;

    double q_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i][0] - y[j][0], dz = y[i][1] - y[j][1];
        const double v = 1.0 / (1.0 + dx * dx + dz * dz);
        num[i * n + j] = num[j * n + i] = v;
        q_sum += 2.0 * v;
      }
    if (q_sum <= 0.0) q_sum = 1e-300;

    for (std::size_t i = 0; i < n; ++i) {
      double g0 = 0.0, g1 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double q = std::max(num[i * n + j] / q_sum, 1e-12);
        const double mult = (exaggeration * p[i * n + j] - q) * num[i * n + j];
        g0 += mult * (y[i][0] - y[j][0]);
        g1 += mult * (y[i][1] - y[j][1]);
      }
      const double grad[2] = {4.0 * g0, 4.0 * g1};
      for (int d = 0; d < 2; ++d) {
        gains[i][d] = (grad[d] > 0) == (dy[i][d] > 0) ? std::max(gains[i][d] * 0.8, 0.01)
                                                      : gains[i][d] + 0.2;
        dy[i][d] = momentum * dy[i][d] - cfg.learning_rate * gains[i][d] * grad[d];
        y[i][d] += dy[i][d];
      }
    }

    double mean0 = 0.0, mean1 = 0.0;
    for (const auto& yi : y) {
      mean0 += yi[0];
      mean1 += yi[1];
    }
    mean0 /= static_cast<double>(n);
    mean1 /= static_cast<double>(n);
    for (auto& yi : y) {
      yi[0] -= mean0;
      yi[1] -= mean1;
    }
  }
  return y;
}

}  // namespace temotts::eval
