// Emotion provider contract and corpus pruning. The keyword stub has a
// closed-form softmax over keyword counts, so confidence values are checkable
// by hand: k same-class keywords give 1 / (1 + 6 e^-k) with 7 classes.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "temotts/emotion/provider.hpp"
#include "temotts/emotion/prune.hpp"

using namespace temotts;
using Catch::Matchers::WithinAbs;

namespace {

double stub_confidence(int keywords) { return 1.0 / (1.0 + 6.0 * std::exp(-keywords)); }

corpus::Utterance utt(std::string id, std::string text) {
  corpus::Utterance u;
  u.id = std::move(id);
  u.text = std::move(text);
  return u;
}

std::filesystem::path write_table(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream os(p);
  os << body;
  return p;
}

}  // namespace

TEST_CASE("keyword stub classifies obvious sentences") {
  emotion::LexiconProvider p;
  REQUIRE(p.classify("I am so sad these days.").dominant_class == "sadness");
  REQUIRE(p.classify("I am excited for the new football season to start!").dominant_class ==
          "joy");
  REQUIRE(p.classify("that was gross and disgusting, revolting even").dominant_class ==
          "disgust");

  // no keywords -> uniform distribution, first label wins the tie
  auto a = p.classify("completely neutral text with nothing at all");
  REQUIRE(a.dominant_class == "anger");
  REQUIRE_THAT(a.dominant_prob, WithinAbs(1.0 / 7.0, 1e-12));

  REQUIRE_THROWS_WITH(p.classify(""), Catch::Matchers::ContainsSubstring("empty"));
}

TEST_CASE("stub confidence follows the keyword-count softmax") {
  emotion::LexiconProvider p;
  auto a1 = p.classify("sad story");
  auto a2 = p.classify("sad unhappy story");
  auto a3 = p.classify("sad unhappy miserable story");
  auto a4 = p.classify("sad unhappy miserable gloomy story");

  REQUIRE_THAT(a1.dominant_prob, WithinAbs(stub_confidence(1), 1e-12));
  REQUIRE_THAT(a2.dominant_prob, WithinAbs(stub_confidence(2), 1e-12));
  REQUIRE_THAT(a3.dominant_prob, WithinAbs(stub_confidence(3), 1e-12));
  REQUIRE_THAT(a4.dominant_prob, WithinAbs(stub_confidence(4), 1e-12));

  // three same-class keywords cross the 0.7 confidence bar, two do not
  REQUIRE(a2.dominant_prob < 0.7);
  REQUIRE(a3.dominant_prob > 0.7);
  REQUIRE_THAT(a4.dominant_prob, WithinAbs(0.9010, 5e-5));

  // monotone in the keyword count
  REQUIRE(a1.dominant_prob < a2.dominant_prob);
  REQUIRE(a2.dominant_prob < a3.dominant_prob);
  REQUIRE(a3.dominant_prob < a4.dominant_prob);

  // punctuation and case do not change tokenization
  REQUIRE(p.classify("SAD, Unhappy... MISERABLE!").dominant_prob == a3.dominant_prob);
}

TEST_CASE("ties break toward the earliest label") {
  emotion::LexiconProvider p;
  auto a = p.classify("angry and sad");  // anger and sadness tie at one keyword
  REQUIRE(a.dominant_class == "anger");  // anger sorts before sadness
  auto b = p.classify("scared and sad");  // fear vs sadness
  REQUIRE(b.dominant_class == "fear");
}

TEST_CASE("stub embeddings are deterministic and sized") {
  emotion::LexiconProvider p("", 32, 7);
  auto e1 = p.embed("sad unhappy miserable");
  auto e2 = p.embed("sad unhappy miserable");
  REQUIRE(e1.size() == 32);
  REQUIRE(p.embedding_dim() == 32);
  REQUIRE(e1 == e2);

  emotion::LexiconProvider q("", 32, 8);  // different seed, different projection
  REQUIRE(q.embed("sad unhappy miserable") != e1);

  // embeddings separate texts with different class distributions
  REQUIRE(p.embed("happy excited glad") != e1);
  REQUIRE(p.id() == "stub:builtin:dim32:seed7");
}

TEST_CASE("mean pooling averages non-padding states") {
  std::vector<std::vector<double>> states{{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}};
  auto m = emotion::mean_pool(states);
  REQUIRE_THAT(m[0], WithinAbs(3.0, 1e-15));
  REQUIRE_THAT(m[1], WithinAbs(4.0, 1e-15));

  std::vector<bool> mask{false, true, true};
  auto first = emotion::mean_pool(states, &mask);
  REQUIRE(first == std::vector<double>{1.0, 2.0});

  REQUIRE_THROWS_WITH(emotion::mean_pool({}), Catch::Matchers::ContainsSubstring("no token"));
  std::vector<std::vector<double>> ragged{{1.0, 2.0}, {3.0}};
  REQUIRE_THROWS_WITH(emotion::mean_pool(ragged), Catch::Matchers::ContainsSubstring("ragged"));
  std::vector<bool> all{true, true, true};
  REQUIRE_THROWS_WITH(emotion::mean_pool(states, &all),
                      Catch::Matchers::ContainsSubstring("padding"));
  std::vector<bool> short_mask{false};
  REQUIRE_THROWS_AS(emotion::mean_pool(states, &short_mask), Error);
}

TEST_CASE("analysis finalization validates the distribution") {
  auto a = emotion::finalize_analysis({"x", "y"}, {0.25, 0.75});
  REQUIRE(a.dominant_class == "y");
  REQUIRE(a.dominant_prob == 0.75);

  REQUIRE_THROWS_AS(emotion::finalize_analysis({"x", "y"}, {0.4, 0.4}), Error);   // sums to 0.8
  REQUIRE_THROWS_AS(emotion::finalize_analysis({"x"}, {-0.2}), Error);            // negative
  REQUIRE_THROWS_AS(emotion::finalize_analysis({"x", "y"}, {1.0}), Error);        // size mismatch
}

TEST_CASE("pruning keeps only confidently classified utterances") {
  emotion::LexiconProvider p;
  std::vector<corpus::Utterance> utts{
      utt("a", "sad unhappy miserable day"),          // sadness, 3 kw -> kept at 0.7
      utt("b", "it was fine and normal"),             // 2 kw -> dropped at 0.7
      utt("c", "happy excited delighted thrilled"),   // joy, 4 kw -> kept
      utt("d", "nothing to see here"),                // uniform -> dropped
      utt("e", "angry furious rage mad hate"),        // anger, 5 kw -> kept
  };

  emotion::PruningConfig cfg;  // 0.7
  auto res = emotion::prune_corpus(utts, p, cfg);

  std::vector<std::string> kept_ids;
  for (const auto& u : res.kept) kept_ids.push_back(u.id);
  REQUIRE(kept_ids == std::vector<std::string>{"a", "c", "e"});  // input order preserved

  REQUIRE(res.report["input_count"] == 5);
  REQUIRE(res.report["kept_count"] == 3);
  REQUIRE(res.report["provider_failures"] == 0);
  REQUIRE(res.report["kept_per_class"]["sadness"] == 1);
  REQUIRE(res.report["kept_per_class"]["joy"] == 1);
  REQUIRE(res.report["kept_per_class"]["anger"] == 1);
  REQUIRE(res.report["kept_ids"] == nlohmann::json({"a", "c", "e"}));
  REQUIRE(res.analyses.count("a") == 1);
  REQUIRE(res.analyses.count("b") == 0);

  SECTION("kept sets nest as the threshold rises") {
    std::vector<std::set<std::string>> kept_sets;
    for (double th : {0.5, 0.7, 0.9}) {
      emotion::PruningConfig c;
      c.threshold = th;
      auto r = emotion::prune_corpus(utts, p, c);
      std::set<std::string> ids;
      for (const auto& u : r.kept) ids.insert(u.id);
      kept_sets.push_back(std::move(ids));
    }
    REQUIRE(std::includes(kept_sets[0].begin(), kept_sets[0].end(), kept_sets[1].begin(),
                          kept_sets[1].end()));
    REQUIRE(std::includes(kept_sets[1].begin(), kept_sets[1].end(), kept_sets[2].begin(),
                          kept_sets[2].end()));
  }
  SECTION("threshold outside (0, 1) is rejected") {
    emotion::PruningConfig bad;
    bad.threshold = 1.0;
    REQUIRE_THROWS_WITH(emotion::prune_corpus(utts, p, bad),
                        Catch::Matchers::ContainsSubstring("(0, 1)"));
  }
}

TEST_CASE("pruning drops a dominant probability exactly at the threshold") {
  // external table pins the distribution to exactly 0.7
  const auto path = write_table(
      "temotts_boundary.jsonl",
      nlohmann::json{{"text", "boundary"},
                     {"probabilities", {0.7, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05}},
                     {"embedding", {0.0, 0.0}}}
              .dump() +
          "\n" +
          nlohmann::json{{"text", "above"},
                         {"probabilities", {0.71, 0.05, 0.05, 0.05, 0.05, 0.04, 0.05}},
                         {"embedding", {0.0, 0.0}}}
              .dump() +
          "\n");
  emotion::ExternalTableProvider p(path);

  std::vector<corpus::Utterance> utts{utt("edge", "boundary"), utt("over", "above"),
                                      utt("miss", "not in the table")};
  emotion::PruningConfig cfg;  // 0.7, strict
  auto res = emotion::prune_corpus(utts, p, cfg);

  REQUIRE(res.kept.size() == 1);
  REQUIRE(res.kept[0].id == "over");               // 0.71 > 0.7 kept
  REQUIRE(res.report["provider_failures"] == 1);   // the table miss is isolated
  std::filesystem::remove(path);
}

TEST_CASE("external provider validates its table") {
  REQUIRE_THROWS_AS(emotion::ExternalTableProvider("/nonexistent/table.jsonl"),
                    MissingArtifactError);

  SECTION("lookup misses name the sentence") {
    const auto path = write_table("temotts_ext.jsonl",
                                  nlohmann::json{{"text", "known"},
                                                 {"probabilities", {1, 0, 0, 0, 0, 0, 0}},
                                                 {"embedding", {1.0, 2.0, 3.0}}}
                                          .dump() +
                                      "\n");
    emotion::ExternalTableProvider p(path);
    REQUIRE(p.embedding_dim() == 3);
    REQUIRE(p.embed("known") == std::vector<double>{1.0, 2.0, 3.0});
    REQUIRE(p.classify("known").dominant_class == "anger");
    REQUIRE_THROWS_WITH(p.embed("mystery sentence"),
                        Catch::Matchers::ContainsSubstring("mystery sentence"));
    REQUIRE(p.id().rfind("external:", 0) == 0);
    std::filesystem::remove(path);
  }
  SECTION("inconsistent embedding widths are fatal") {
    const auto path = write_table(
        "temotts_ext_bad.jsonl",
        nlohmann::json{{"text", "a"},
                       {"probabilities", {1, 0, 0, 0, 0, 0, 0}},
                       {"embedding", {1.0, 2.0}}}
                .dump() +
            "\n" +
            nlohmann::json{{"text", "b"},
                           {"probabilities", {1, 0, 0, 0, 0, 0, 0}},
                           {"embedding", {1.0}}}
                .dump() +
            "\n");
    REQUIRE_THROWS_WITH(emotion::ExternalTableProvider(path),
                        Catch::Matchers::ContainsSubstring("inconsistent embedding dimension"));
    std::filesystem::remove(path);
  }
  SECTION("empty table is fatal") {
    const auto path = write_table("temotts_ext_empty.jsonl", "\n");
    REQUIRE_THROWS_WITH(emotion::ExternalTableProvider(path),
                        Catch::Matchers::ContainsSubstring("empty"));
    std::filesystem::remove(path);
  }
}

TEST_CASE("provider specifiers parse or fail loudly") {
  auto stub = emotion::make_provider("stub:builtin", 16, 5);
  REQUIRE(stub->id() == "stub:builtin:dim16:seed5");
  REQUIRE(stub->labels() == emotion::default_labels());

  REQUIRE_THROWS_WITH(emotion::make_provider("external:"),
                      Catch::Matchers::ContainsSubstring("table path"));
  REQUIRE_THROWS_WITH(emotion::make_provider("bogus:thing"),
                      Catch::Matchers::ContainsSubstring("unknown emotion provider"));
}
