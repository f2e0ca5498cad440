#pragma once

// Deterministic train/val/test split with exact largest-remainder quotas
// (default 18:1:1).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "temotts/core/common.hpp"
#include "temotts/core/random.hpp"
#include "temotts/corpus/types.hpp"

namespace temotts::corpus {

struct SplitConfig {
  double train = 18.0;
  double val = 1.0;
  double test = 1.0;
  std::uint64_t seed = 1234;
};

// Exact integer quotas for the three partitions: scale ratios to counts,
// floor, then give leftover slots to the largest fractional parts (ties by
// partition order train > val > test).
inline std::array<std::size_t, 3> split_quotas(std::size_t n, const SplitConfig& cfg) {
  const double total = cfg.train + cfg.val + cfg.test;
  if (total <= 0.0) throw Error("split ratios must be positive");
  const double parts[3] = {cfg.train, cfg.val, cfg.test};
  std::array<std::size_t, 3> out{};
  double frac[3];
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * parts[i] / total;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    frac[i] = exact - std::floor(exact);
    assigned += out[i];
  }
  std::size_t leftover = n - assigned;
  std::array<int, 3> order = {0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a < b;
  });
  for (std::size_t k = 0; k < leftover; ++k) out[order[k % 3]] += 1;
  return out;
}

inline CorpusSplit split_ids(const std::vector<std::string>& ids, const SplitConfig& cfg = {}) {
  if (ids.empty()) throw Error("cannot split an empty corpus");
  if (ids.size() < 20)
    log::warn("corpus has " + std::to_string(ids.size()) +
              " utterances; splits below 20 leave val/test nearly empty");

  std::vector<std::size_t> perm(ids.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(cfg.seed);
  rng.shuffle(perm);

  const auto quotas = split_quotas(ids.size(), cfg);
  CorpusSplit split;
  split.train.reserve(quotas[0]);
  split.val.reserve(quotas[1]);
  split.test.reserve(quotas[2]);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < quotas[0]; ++k) split.train.push_back(ids[perm[pos++]]);
  for (std::size_t k = 0; k < quotas[1]; ++k) split.val.push_back(ids[perm[pos++]]);
  for (std::size_t k = 0; k < quotas[2]; ++k) split.test.push_back(ids[perm[pos++]]);
  return split;
}

inline CorpusSplit split_corpus(const std::vector<Utterance>& utts, const SplitConfig& cfg = {}) {
  std::vector<std::string> ids;
  ids.reserve(utts.size());
  for (const auto& u : utts) ids.push_back(u.id);
  return split_ids(ids, cfg);
}

}  // namespace temotts::corpus
