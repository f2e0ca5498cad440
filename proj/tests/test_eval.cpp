// Evaluation helpers: CER/WER against a brute-force edit-distance oracle,
// SER confusion bookkeeping, pitch-contour extraction on known tones, and the
// dual-space 2-D projection.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "temotts/eval/confusion.hpp"
#include "temotts/eval/pitchcontour.hpp"
#include "temotts/eval/project.hpp"
#include "temotts/eval/textmetrics.hpp"

using namespace temotts;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

// Exponential-time textbook recurrence, memoized: an independent oracle for
// the DP implementation.
std::size_t edit_distance_oracle(const std::string& a, const std::string& b,
                                 std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo,
                                 std::size_t i, std::size_t j) {
  if (i == 0) return j;
  if (j == 0) return i;
  const auto key = std::make_pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::size_t best = std::min(edit_distance_oracle(a, b, memo, i - 1, j) + 1,
                              edit_distance_oracle(a, b, memo, i, j - 1) + 1);
  best = std::min(best, edit_distance_oracle(a, b, memo, i - 1, j - 1) +
                            (a[i - 1] == b[j - 1] ? 0 : 1));
  memo[key] = best;
  return best;
}

std::size_t edit_distance_oracle(const std::string& a, const std::string& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  return edit_distance_oracle(a, b, memo, a.size(), b.size());
}

std::vector<double> sine(double freq, double secs, std::size_t rate) {
  std::vector<double> w(static_cast<std::size_t>(secs * static_cast<double>(rate)));
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = 0.6 * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / static_cast<double>(rate));
  return w;
}

}  // namespace

TEST_CASE("transcript normalization") {
  REQUIRE(eval::normalize_transcript("Hello,  WORLD!") == "hello world");
  REQUIRE(eval::normalize_transcript("  a\tb\nc  ") == "a b c");
  REQUIRE(eval::normalize_transcript("it's \"quoted\"") == "its quoted");
  REQUIRE(eval::normalize_transcript("...") == "");
  // multibyte text passes through untouched
  REQUIRE(eval::normalize_transcript("caf\xC3\xA9") == "caf\xC3\xA9");
}

TEST_CASE("utf-8 codepoint splitting") {
  auto cps = eval::utf8_codepoints("caf\xC3\xA9");
  REQUIRE(cps.size() == 4);
  REQUIRE(cps[3] == "\xC3\xA9");
  REQUIRE(eval::utf8_codepoints("\xE6\x97\xA5\xE6\x9C\xAC").size() == 2);
  REQUIRE(eval::utf8_codepoints("").empty());
}

TEST_CASE("edit distance matches the recursive oracle") {
  REQUIRE(eval::levenshtein(std::string("kitten"), std::string("sitting")) == 3);
  REQUIRE(eval::levenshtein(std::string(""), std::string("abc")) == 3);
  REQUIRE(eval::levenshtein(std::string("same"), std::string("same")) == 0);

  Rng rng(41);
  for (int it = 0; it < 100; ++it) {
    std::string a, b;
    const std::size_t la = rng.index(9), lb = rng.index(9);
    for (std::size_t i = 0; i < la; ++i) a.push_back(static_cast<char>('a' + rng.index(4)));
    for (std::size_t i = 0; i < lb; ++i) b.push_back(static_cast<char>('a' + rng.index(4)));
    REQUIRE(eval::levenshtein(a, b) == edit_distance_oracle(a, b));
  }
}

TEST_CASE("character and word error rates") {
  eval::TranscriptPair p{"hello world", "hello word"};
  REQUIRE_THAT(eval::cer(p), WithinAbs(1.0 / 11.0, 1e-12));  // one deleted character
  REQUIRE_THAT(eval::wer(p), WithinAbs(0.5, 1e-12));         // one of two words wrong

  eval::TranscriptPair exact{"The Cat.", "the cat"};
  REQUIRE(eval::cer(exact) == 0.0);  // normalization removes the difference
  REQUIRE(eval::wer(exact) == 0.0);

  eval::TranscriptPair hyp_extra{"one", "one two three"};
  REQUIRE_THAT(eval::wer(hyp_extra), WithinAbs(2.0, 1e-12));  // insertions can exceed 1

  REQUIRE_THROWS_WITH(eval::cer({"...", "text"}),
                      Catch::Matchers::ContainsSubstring("empty"));
  REQUIRE_THROWS_AS(eval::wer({"", "text"}), Error);
}

TEST_CASE("ser confusion matrix") {
  const std::vector<std::string> truth{"anger", "anger", "sadness", "neutral", "happiness"};
  const std::vector<std::string> pred{"anger", "sadness", "sadness", "neutral", "neutral"};
  auto m = eval::ser_confusion(truth, pred);

  REQUIRE(m.labels == eval::ser_classes());
  REQUIRE(m.total() == 5);
  REQUIRE(m.at(0, 0) == 1);  // anger -> anger
  REQUIRE(m.at(0, 3) == 1);  // anger -> sadness
  REQUIRE(m.at(3, 3) == 1);  // sadness -> sadness
  REQUIRE(m.at(2, 2) == 1);  // neutral -> neutral
  REQUIRE(m.at(1, 2) == 1);  // happiness -> neutral
  REQUIRE_THAT(m.accuracy(), WithinAbs(3.0 / 5.0, 1e-12));

  auto j = m.to_json();
  REQUIRE(j["total"] == 5);
  REQUIRE(j["counts"][0][0] == 1);
  REQUIRE(j["counts"][0][3] == 1);

  REQUIRE_THROWS_WITH(eval::ser_confusion({"anger"}, {"boredom"}),
                      Catch::Matchers::ContainsSubstring("boredom"));
  REQUIRE_THROWS_AS(eval::ser_confusion({"anger"}, {}), Error);
}

TEST_CASE("pitch contour of a pure tone") {
  const std::size_t rate = 22050;
  auto contour = eval::extract_pitch_contour(sine(220.0, 0.6, rate), rate);
  REQUIRE_FALSE(contour.times.empty());
  REQUIRE(contour.times.size() == contour.f0.size());
  for (std::size_t i = 1; i < contour.times.size(); ++i)
    REQUIRE(contour.times[i] > contour.times[i - 1]);

  const double med = eval::median_voiced_f0(contour);
  REQUIRE_THAT(med, WithinAbs(220.0, 5.0));

  SECTION("silence stays unvoiced") {
    auto quiet = eval::extract_pitch_contour(std::vector<double>(rate / 2, 0.0), rate);
    for (double f : quiet.f0) REQUIRE(f == 0.0);
    REQUIRE(eval::median_voiced_f0(quiet) == 0.0);
  }
  SECTION("csv dump parses back") {
    const auto path = fs::temp_directory_path() / "temotts_contour.csv";
    eval::write_contour_csv(path, contour);
    std::ifstream is(path);
    std::string header;
    std::getline(is, header);
    REQUIRE(header == "time_s,f0_hz");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    REQUIRE(rows == contour.times.size());
    fs::remove(path);
  }
}

TEST_CASE("dual-space projection separates planted clusters") {
  // two clusters in both weight space and embedding space
  Rng rng(47);
  std::vector<std::vector<double>> weights, embeddings;
  std::vector<std::size_t> class_ids;
  const std::size_t per = 8;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < per; ++i) {
      std::vector<double> w(16, 0.01);
      w[c * 8] = 1.0 - 0.01 * 15;
      for (auto& v : w) v += rng.uniform(0.0, 0.004);
      weights.push_back(w);
      std::vector<double> e(10, c == 0 ? -2.0 : 2.0);
      for (auto& v : e) v += rng.uniform(-0.2, 0.2);
      embeddings.push_back(e);
      class_ids.push_back(c);
    }
  }

  auto proj = eval::project_spaces(weights, embeddings, 123);
  REQUIRE(proj.weight_coords.size() == weights.size());
  REQUIRE(proj.embedding_coords.size() == embeddings.size());

  auto separation = [&](const std::vector<std::array<double, 2>>& pts) {
    std::array<double, 2> c0{0, 0}, c1{0, 0};
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto& c = class_ids[i] == 0 ? c0 : c1;
      c[0] += pts[i][0] / per;
      c[1] += pts[i][1] / per;
    }
    const double inter = std::hypot(c0[0] - c1[0], c0[1] - c1[1]);
    double intra = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto& c = class_ids[i] == 0 ? c0 : c1;
      intra += std::hypot(pts[i][0] - c[0], pts[i][1] - c[1]) / static_cast<double>(pts.size());
    }
    return inter / std::max(intra, 1e-12);
  };
  REQUIRE(separation(proj.weight_coords) > 1.0);
  REQUIRE(separation(proj.embedding_coords) > 1.0);

  SECTION("projection is deterministic in the seed") {
    auto again = eval::project_spaces(weights, embeddings, 123);
    REQUIRE(again.weight_coords == proj.weight_coords);
    REQUIRE(again.embedding_coords == proj.embedding_coords);
  }
  SECTION("figure and csv are written") {
    const auto png = fs::temp_directory_path() / "temotts_proj.png";
    const auto csv = fs::temp_directory_path() / "temotts_proj.csv";
    eval::render_projection_figure(png, proj, class_ids);
    std::ifstream is(png, std::ios::binary);
    char sig[8] = {};
    is.read(sig, 8);
    REQUIRE(is.gcount() == 8);
    REQUIRE(static_cast<unsigned char>(sig[0]) == 0x89);
    REQUIRE(std::string(sig + 1, 3) == "PNG");

    std::vector<std::string> ids(weights.size(), "u");
    std::vector<std::string> classes(weights.size(), "joy");
    eval::write_coords_csv(csv, proj, ids, classes);
    std::ifstream cs(csv);
    std::string header;
    std::getline(cs, header);
    REQUIRE(header == "id,class,weights_x,weights_y,embedding_x,embedding_y");
    std::size_t rows = 0;
    std::string line;
    while (std::getline(cs, line))
      if (!line.empty()) ++rows;
    REQUIRE(rows == weights.size());
    fs::remove(png);
    fs::remove(csv);
  }
  SECTION("input validation") {
    REQUIRE_THROWS_WITH(eval::project_spaces({weights[0]}, {embeddings[0]}, 1),
                        Catch::Matchers::ContainsSubstring("at least 5"));
    auto short_emb = embeddings;
    short_emb.pop_back();
    REQUIRE_THROWS_WITH(eval::project_spaces(weights, short_emb, 1),
                        Catch::Matchers::ContainsSubstring("row count"));
  }
}
