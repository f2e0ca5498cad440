// Stage-II adaptation network: softmax outputs must be simplexes, the soft
// cross-entropy must satisfy the textbook identities (H(p) at equality, ln 16
// against uniform predictions, Gibbs inequality), and training must fit both
// a single pair and separable clusters.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "temotts/adaptation/net.hpp"
#include "support/gradcheck.hpp"

using namespace temotts;
using Catch::Matchers::WithinAbs;

namespace {

adaptation::AdaptationConfig small_config(std::vector<std::size_t> sizes) {
  adaptation::AdaptationConfig cfg;
  cfg.layer_sizes = std::move(sizes);
  return cfg;
}

std::vector<double> random_simplex(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  double sum = 0.0;
  for (auto& x : v) {
    x = rng.uniform(0.05, 1.0);
    sum += x;
  }
  for (auto& x : v) x /= sum;
  return v;
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("layer plan resizes its input to the provider dimension") {
  auto cfg = small_config({772, 40, 16});
  REQUIRE(cfg.effective_sizes(9) == std::vector<std::size_t>{9, 40, 16});
  cfg.input_dim_override = 7;
  REQUIRE(cfg.effective_sizes(9) == std::vector<std::size_t>{7, 40, 16});
  REQUIRE(cfg.output_dim() == 16);

  REQUIRE_THROWS_AS(small_config({16}).validate(), Error);
  REQUIRE_THROWS_AS(small_config({8, 0, 16}).validate(), Error);
}

TEST_CASE("zeroed network predicts the exact uniform simplex") {
  Rng rng(3);
  adaptation::AdaptationNet net(small_config({6, 10, 16}), 6, rng);
  nn::ParamMap pm;
  net.params(pm);
  for (auto& [name, t] : pm.items)
    std::fill(t.data().begin(), t.data().end(), 0.0);

  auto w = net.predict_weights({0.4, -1.2, 3.0, 0.0, 2.2, -0.7});
  REQUIRE(w.size() == 16);
  for (double v : w) REQUIRE(v == 0.0625);  // zero logits -> exactly 1/16
}

TEST_CASE("predicted weights always form a simplex") {
  Rng rng(5);
  adaptation::AdaptationNet net(small_config({8, 24, 16}), 8, rng);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> emb(8);
    for (auto& v : emb) v = rng.uniform(-5.0, 5.0);
    auto w = net.predict_weights(emb);
    double sum = 0.0;
    for (double v : w) {
      REQUIRE(v >= 0.0);
      sum += v;
    }
    REQUIRE_THAT(sum, WithinAbs(1.0, 1e-12));
  }
  REQUIRE_THROWS_WITH(net.predict_weights({1.0, 2.0}),
                      Catch::Matchers::ContainsSubstring("dimension 8"));
}

TEST_CASE("soft cross-entropy identities") {
  Rng rng(7);
  SECTION("self cross-entropy equals the entropy") {
    for (int it = 0; it < 100; ++it) {
      auto p = random_simplex(16, rng);
      REQUIRE_THAT(adaptation::ce_soft_loss(p, p), WithinAbs(entropy(p), 1e-6));
    }
  }
  SECTION("uniform prediction against a one-hot target costs ln 16") {
    std::vector<double> uniform(16, 1.0 / 16.0), onehot(16, 0.0);
    onehot[5] = 1.0;
    REQUIRE_THAT(adaptation::ce_soft_loss(uniform, onehot), WithinAbs(std::log(16.0), 1e-6));
  }
  SECTION("Gibbs: cross-entropy is minimized by the target itself") {
    for (int it = 0; it < 100; ++it) {
      auto p = random_simplex(16, rng);
      auto q = random_simplex(16, rng);
      REQUIRE(adaptation::ce_soft_loss(q, p) >= adaptation::ce_soft_loss(p, p) - 1e-9);
    }
  }
  REQUIRE_THROWS_AS(adaptation::ce_soft_loss({0.5, 0.5}, {1.0}), Error);
}

TEST_CASE("batched objective matches the value-level form") {
  Rng rng(11);
  adaptation::AdaptationNet net(small_config({4, 12, 16}), 4, rng);
  std::vector<double> emb{0.3, -1.0, 0.8, 2.0};
  auto target = random_simplex(16, rng);

  auto logits = net.forward_logits(nn::Tensor::make({1, 4}, emb));
  auto batch_loss = adaptation::ce_soft_batch(logits, nn::Tensor::make({1, 16}, target));
  const double value_loss = adaptation::ce_soft_loss(net.predict_weights(emb), target);
  REQUIRE_THAT(batch_loss.item(), WithinAbs(value_loss, 1e-9));

  auto bad = nn::Tensor::make({1, 4}, emb);
  REQUIRE_THROWS_WITH(adaptation::ce_soft_batch(logits, bad),
                      Catch::Matchers::ContainsSubstring("shape mismatch"));
}

TEST_CASE("two-layer network passes a directional gradient check") {
  Rng rng(13);
  adaptation::AdaptationNet net(small_config({5, 20, 16}), 5, rng);
  nn::ParamMap pm;
  net.params(pm);
  std::vector<nn::Tensor> leaves;
  for (auto& [name, t] : pm.items) leaves.push_back(t);

  const std::size_t batch = 3;
  std::vector<double> embs, targets;
  for (std::size_t b = 0; b < batch; ++b) {
    for (int i = 0; i < 5; ++i) embs.push_back(rng.uniform(-2.0, 2.0));
    for (double v : random_simplex(16, rng)) targets.push_back(v);
  }
  auto x = nn::Tensor::make({batch, 5}, embs);
  auto t = nn::Tensor::make({batch, 16}, targets);
  auto loss_fn = [&]() { return adaptation::ce_soft_batch(net.forward_logits(x), t); };

  Rng dir_rng(17);
  for (int d = 0; d < 8; ++d)
    REQUIRE(testsupport::direction_grad_error(leaves, loss_fn, dir_rng) <= 1e-3);
}

TEST_CASE("training overfits a single pair to its entropy floor") {
  Rng rng(19);
  adaptation::WeightPair pair;
  pair.id = "only";
  pair.embedding = {1.0, -0.5, 0.25, 2.0};
  pair.target_weights = random_simplex(16, rng);

  adaptation::AdaptationTrainConfig tcfg;
  tcfg.max_epochs = 600;
  tcfg.lr = 1e-2;
  tcfg.batch_size = 1;
  tcfg.seed = 42;

  auto res = adaptation::train_adaptation({pair}, small_config({4, 32, 16}), tcfg);
  REQUIRE_FALSE(res.diverged);
  const double ce = adaptation::ce_soft_loss(res.net.predict_weights(pair.embedding),
                                             pair.target_weights);
  REQUIRE(ce - entropy(pair.target_weights) < 1e-2);  // excess over the floor
}

TEST_CASE("training input validation") {
  REQUIRE_THROWS_WITH(adaptation::train_adaptation({}, small_config({4, 16})),
                      Catch::Matchers::ContainsSubstring("empty"));

  adaptation::WeightPair a, b;
  a.id = "a";
  a.embedding = {1.0, 2.0};
  a.target_weights = std::vector<double>(16, 1.0 / 16.0);
  b = a;
  b.id = "b";
  b.embedding = {1.0, 2.0, 3.0};
  REQUIRE_THROWS_WITH(adaptation::train_adaptation({a, b}, small_config({4, 16})),
                      Catch::Matchers::ContainsSubstring("'b'"));

  adaptation::WeightPair c = a;
  c.id = "c";
  c.target_weights.resize(4);
  REQUIRE_THROWS_WITH(adaptation::train_adaptation({a, c}, small_config({4, 16})),
                      Catch::Matchers::ContainsSubstring("'c'"));
}

TEST_CASE("training is deterministic for a fixed seed") {
  Rng rng(23);
  std::vector<adaptation::WeightPair> pairs;
  for (int i = 0; i < 12; ++i) {
    adaptation::WeightPair p;
    p.id = "p" + std::to_string(i);
    p.embedding = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
    p.target_weights = random_simplex(16, rng);
    pairs.push_back(std::move(p));
  }
  adaptation::AdaptationTrainConfig tcfg;
  tcfg.max_epochs = 40;
  tcfg.seed = 7;

  auto r1 = adaptation::train_adaptation(pairs, small_config({4, 24, 16}), tcfg);
  auto r2 = adaptation::train_adaptation(pairs, small_config({4, 24, 16}), tcfg);
  REQUIRE(r1.curve.size() == r2.curve.size());
  for (std::size_t i = 0; i < r1.curve.size(); ++i) {
    REQUIRE(r1.curve[i].train == r2.curve[i].train);
    REQUIRE(r1.curve[i].val == r2.curve[i].val);
  }
  REQUIRE(r1.net.predict_weights(pairs[0].embedding) ==
          r2.net.predict_weights(pairs[0].embedding));
}

TEST_CASE("training separates well-clustered embeddings") {
  // four clusters in embedding space, each mapped to a distinct peaked simplex
  Rng rng(29);
  const std::size_t dim = 6, clusters = 4, per = 20;
  std::vector<std::vector<double>> centers(clusters, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < clusters; ++c) centers[c][c] = 3.0;

  std::vector<adaptation::WeightPair> pairs;
  std::vector<std::size_t> truth;
  for (std::size_t c = 0; c < clusters; ++c) {
    std::vector<double> target(16, 0.02);
    target[c * 4] = 1.0 - 0.02 * 15;  // peak at token 4c
    for (std::size_t i = 0; i < per; ++i) {
      adaptation::WeightPair p;
      p.id = "c" + std::to_string(c) + "_" + std::to_string(i);
      p.embedding = centers[c];
      for (auto& v : p.embedding) v += rng.uniform(-0.4, 0.4);
      p.target_weights = target;
      pairs.push_back(std::move(p));
      truth.push_back(c);
    }
  }

  // sanity oracle: nearest centroid classifies these embeddings perfectly
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < clusters; ++c) {
      double d = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = pairs[i].embedding[k] - centers[c][k];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    REQUIRE(best == truth[i]);
  }

  adaptation::AdaptationTrainConfig tcfg;
  tcfg.max_epochs = 150;
  tcfg.lr = 3e-3;
  tcfg.seed = 31;
  auto res = adaptation::train_adaptation(pairs, small_config({4, 32, 16}), tcfg);
  REQUIRE_FALSE(res.diverged);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto w = res.net.predict_weights(pairs[i].embedding);
    if (argmax(w) == truth[i] * 4) ++correct;
  }
  REQUIRE(static_cast<double>(correct) / static_cast<double>(pairs.size()) >= 0.9);
}
