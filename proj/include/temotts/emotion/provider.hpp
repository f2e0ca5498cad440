#pragma once

// Emotion-aware text analysis behind a two-method contract: class
// probabilities and a pooled sentence embedding. Production runs plug in an
// exported external model ("external:<table.jsonl>"); tests and the demo
// pipeline use a deterministic keyword-lexicon provider ("stub:<lexicon>").

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/common.hpp"

namespace temotts::emotion {

inline const std::vector<std::string>& default_labels() {
  static const std::vector<std::string> labels = {"anger",   "disgust", "fear",    "joy",
                                                  "neutral", "sadness", "surprise"};
  return labels;
}

struct EmotionAnalysis {
  std::vector<std::string> class_labels;
  std::vector<double> probabilities;
  std::string dominant_class;
  double dominant_prob = 0.0;
};

// Fills dominant_class/dominant_prob; ties break toward the earliest label.
inline EmotionAnalysis finalize_analysis(std::vector<std::string> labels,
                                         std::vector<double> probs) {
  if (labels.size() != probs.size() || labels.empty())
    throw Error("emotion analysis: label/probability size mismatch");
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw Error("emotion analysis: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw Error("emotion analysis: probabilities sum to " + std::to_string(sum));
  EmotionAnalysis a;
  a.class_labels = std::move(labels);
  a.probabilities = std::move(probs);
  std::size_t best = 0;
  for (std::size_t i = 1; i < a.probabilities.size(); ++i)
    if (a.probabilities[i] > a.probabilities[best]) best = i;  // strict: ties keep first
  a.dominant_class = a.class_labels[best];
  a.dominant_prob = a.probabilities[best];
  return a;
}

// Mean of final-layer token states over non-padding positions. `padding`
// marks positions to exclude; null means nothing is padding.
inline std::vector<double> mean_pool(const std::vector<std::vector<double>>& states,
                                     const std::vector<bool>* padding = nullptr) {
  if (states.empty()) throw Error("mean_pool: no token states");
  if (padding && padding->size() != states.size())
    throw Error("mean_pool: padding mask length mismatch");
  const std::size_t dim = states[0].size();
  std::vector<double> out(dim, 0.0);
  std::size_t used = 0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    if (padding && (*padding)[t]) continue;
    if (states[t].size() != dim) throw Error("mean_pool: ragged token states");
    for (std::size_t d = 0; d < dim; ++d) out[d] += states[t][d];
    ++used;
  }
  if (used == 0) throw Error("mean_pool: all positions are padding");
  for (double& v : out) v /= static_cast<double>(used);
  return out;
}

class EmotionProvider {
 public:
  virtual ~EmotionProvider() = default;
  virtual EmotionAnalysis classify(const std::string& text) const = 0;
  virtual std::vector<double> embed(const std::string& text) const = 0;
  virtual std::size_t embedding_dim() const = 0;
  virtual const std::vector<std::string>& labels() const = 0;
  // Stable identity recorded in downstream artifacts so mismatched providers
  // are rejected at load.
  virtual std::string id() const = 0;
};

namespace detail {

inline const std::map<std::string, std::string>& builtin_lexicon() {
  static const std::map<std::string, std::string> lex = {
      {"angry", "anger"},       {"furious", "anger"},    {"rage", "anger"},
      {"mad", "anger"},         {"hate", "anger"},       {"annoyed", "anger"},
      {"outraged", "anger"},    {"disgusting", "disgust"}, {"gross", "disgust"},
      {"nasty", "disgust"},     {"revolting", "disgust"}, {"sick", "disgust"},
      {"afraid", "fear"},       {"scared", "fear"},      {"terrified", "fear"},
      {"fear", "fear"},         {"frightened", "fear"},  {"worried", "fear"},
      {"happy", "joy"},         {"excited", "joy"},      {"joy", "joy"},
      {"delighted", "joy"},     {"glad", "joy"},         {"wonderful", "joy"},
      {"great", "joy"},         {"love", "joy"},         {"thrilled", "joy"},
      {"fantastic", "joy"},     {"okay", "neutral"},     {"fine", "neutral"},
      {"normal", "neutral"},    {"usual", "neutral"},    {"regular", "neutral"},
      {"sad", "sadness"},       {"unhappy", "sadness"},  {"miserable", "sadness"},
      {"crying", "sadness"},    {"gloomy", "sadness"},   {"depressed", "sadness"},
      {"sorrow", "sadness"},    {"tears", "sadness"},    {"surprised", "surprise"},
      {"astonished", "surprise"}, {"amazed", "surprise"}, {"shocking", "surprise"},
      {"unexpected", "surprise"}, {"wow", "surprise"},
  };
  return lex;
}

inline std::string strip_token(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    if (c >= 'a' && c <= 'z') out.push_back(c);
    if (c >= 'A' && c <= 'Z') out.push_back(static_cast<char>(c - 'A' + 'a'));
  }
  return out;
}

// Hash-seeded pseudo-random projection value in [-1, 1].
inline double hash_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = fnv1a64(reinterpret_cast<const char*>(&a), sizeof(a), seed);
  h = fnv1a64(reinterpret_cast<const char*>(&b), sizeof(b), h);
  return static_cast<double>(h >> 11) / static_cast<double>(1ull << 53) * 2.0 - 1.0;
}

}  // namespace detail

// Deterministic keyword provider: per-class keyword counts through a softmax,
// embedding = seeded hash projection of the probability vector. No text is
// classified confidently (>0.7 with 7 classes) unless it carries at least
// three same-class keywords — useful to exercise pruning both ways.
class LexiconProvider : public EmotionProvider {
 public:
  explicit LexiconProvider(const std::string& lexicon_path = "", std::size_t dim = 768,
                           std::uint64_t seed = 1234)
      : dim_(dim), seed_(seed), labels_(default_labels()) {
    if (lexicon_path.empty() || lexicon_path == "builtin") {
      lexicon_ = detail::builtin_lexicon();
      source_ = "builtin";
    } else {
      load_lexicon(lexicon_path);
      source_ = file_fingerprint(lexicon_path);
    }
    for (const auto& [word, cls] : lexicon_)
      if (std::find(labels_.begin(), labels_.end(), cls) == labels_.end())
        throw Error("lexicon class '" + cls + "' for keyword '" + word + "' is not a known label");
  }

  EmotionAnalysis classify(const std::string& text) const override {
    if (text.empty()) throw Error("classify_emotion: empty text");
    std::vector<double> counts(labels_.size(), 0.0);
    for (const auto& raw : split_whitespace(text)) {
      const std::string tok = detail::strip_token(raw);
      auto it = lexicon_.find(tok);
      if (it == lexicon_.end()) continue;
      const auto pos = std::find(labels_.begin(), labels_.end(), it->second);
      counts[static_cast<std::size_t>(pos - labels_.begin())] += 1.0;
    }
    // Softmax over counts; zero hits everywhere -> uniform.
    const double mx = *std::max_element(counts.begin(), counts.end());
    double denom = 0.0;
    std::vector<double> probs(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
      probs[i] = std::exp(counts[i] - mx);
      denom += probs[i];
    }
    for (double& p : probs) p /= denom;
    return finalize_analysis(labels_, std::move(probs));
  }

  std::vector<double> embed(const std::string& text) const override {
    const auto probs = classify(text).probabilities;
    std::vector<double> out(dim_, 0.0);
    for (std::size_t d = 0; d < dim_; ++d)
      for (std::size_t k = 0; k < probs.size(); ++k)
        out[d] += probs[k] * detail::hash_unit(seed_, d, k);
    return out;
  }

  std::size_t embedding_dim() const override { return dim_; }
  const std::vector<std::string>& labels() const override { return labels_; }

  std::string id() const override {
    return "stub:" + source_ + ":dim" + std::to_string(dim_) + ":seed" + std::to_string(seed_);
  }

 private:
  void load_lexicon(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError(path.string(), "emotion keyword lexicon");
    std::string line;
    while (std::getline(is, line)) {
      auto toks = split_whitespace(line);
      if (toks.size() != 2) continue;
      lexicon_[lowercase(toks[0])] = lowercase(toks[1]);
    }
    if (lexicon_.empty()) throw Error(path.string() + ": lexicon has no entries");
  }

  std::map<std::string, std::string> lexicon_;
  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<std::string> labels_;
  std::string source_;
};

// Precomputed lookup table exported from a real emotion model: JSON-lines of
// {"text": ..., "probabilities": [K], "embedding": [D]}.
class ExternalTableProvider : public EmotionProvider {
 public:
  explicit ExternalTableProvider(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
      throw MissingArtifactError(path.string(),
                                 "emotion model export; generate it with the external encoder or "
                                 "switch to the stub provider");
    fingerprint_ = file_fingerprint(path);
    labels_ = default_labels();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (j.contains("labels")) labels_ = j.at("labels").get<std::vector<std::string>>();
      Entry e;
      e.probs = j.at("probabilities").get<std::vector<double>>();
      e.embedding = j.at("embedding").get<std::vector<double>>();
      if (dim_ == 0) dim_ = e.embedding.size();
      if (e.embedding.size() != dim_)
        throw Error(path.string() + ":" + std::to_string(line_no) +
                    ": inconsistent embedding dimension");
      table_[j.at("text").get<std::string>()] = std::move(e);
    }
    if (table_.empty()) throw Error(path.string() + ": provider table is empty");
  }

  EmotionAnalysis classify(const std::string& text) const override {
    return finalize_analysis(labels_, lookup(text).probs);
  }

  std::vector<double> embed(const std::string& text) const override {
    return lookup(text).embedding;
  }

  std::size_t embedding_dim() const override { return dim_; }
  const std::vector<std::string>& labels() const override { return labels_; }
  std::string id() const override { return "external:" + fingerprint_; }

 private:
  struct Entry {
    std::vector<double> probs;
    std::vector<double> embedding;
  };

  const Entry& lookup(const std::string& text) const {
    if (text.empty()) throw Error("classify_emotion: empty text");
    auto it = table_.find(text);
    if (it == table_.end())
      throw Error("text not present in the emotion provider table: \"" + text +
                  "\"; re-export the table with this sentence included");
    return it->second;
  }

  std::map<std::string, Entry> table_;
  std::vector<std::string> labels_;
  std::size_t dim_ = 0;
  std::string fingerprint_;
};

// Parses "stub:<lexicon>" / "external:<table.jsonl>" provider specifiers.
inline std::unique_ptr<EmotionProvider> make_provider(const std::string& spec,
                                                      std::size_t stub_dim = 768,
                                                      std::uint64_t stub_seed = 1234) {
  const auto colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "stub") return std::make_unique<LexiconProvider>(arg, stub_dim, stub_seed);
  if (kind == "external") {
    if (arg.empty()) throw Error("provider 'external:' needs a table path");
    return std::make_unique<ExternalTableProvider>(arg);
  }
  throw Error("unknown emotion provider '" + spec + "' (want stub:<lexicon> or external:<table>)");
}

}  // namespace temotts::emotion
