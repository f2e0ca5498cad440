#pragma once

// Grapheme-to-phoneme front end: dictionary lookup with per-letter fallback
// for unknown words, plus the phoneme inventory shared between preprocessing
// and synthesis.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/common.hpp"

namespace temotts::corpus {

// Symbol <-> id mapping. Id 0 is reserved for padding. Built once during
// preprocessing (alignment symbols + G2P inventory) and stored in the stage-I
// checkpoint so synthesis maps text into the same id space.
class PhonemeInventory {
 public:
  PhonemeInventory() { add("<pad>"); }

  explicit PhonemeInventory(const std::vector<std::string>& symbols) {
    for (const auto& s : symbols) add(s);
    if (symbols.empty() || symbols[0] != "<pad>")
      throw Error("phoneme inventory must start with <pad>");
  }

  std::size_t add(const std::string& symbol) {
    auto it = index_.find(symbol);
    if (it != index_.end()) return it->second;
    const std::size_t id = symbols_.size();
    symbols_.push_back(symbol);
    index_[symbol] = id;
    return id;
  }

  bool contains(const std::string& symbol) const { return index_.count(symbol) > 0; }

  std::size_t id(const std::string& symbol) const {
    auto it = index_.find(symbol);
    if (it == index_.end()) throw Error("out-of-vocabulary phoneme symbol: '" + symbol + "'");
    return it->second;
  }

  const std::string& symbol(std::size_t id) const {
    if (id >= symbols_.size()) throw Error("phoneme id out of range: " + std::to_string(id));
    return symbols_[id];
  }

  std::vector<std::size_t> encode(const std::vector<std::string>& symbols) const {
    std::vector<std::size_t> ids;
    ids.reserve(symbols.size());
    for (const auto& s : symbols) ids.push_back(id(s));
    return ids;
  }

  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  nlohmann::json to_json() const { return symbols_; }

  static PhonemeInventory from_json(const nlohmann::json& j) {
    return PhonemeInventory(j.get<std::vector<std::string>>());
  }

 private:
  std::vector<std::string> symbols_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {

// Small built-in pronouncing dictionary (ARPAbet, stress stripped) so the
// demo pipeline speaks without an external dictionary file.
inline const std::map<std::string, std::vector<std::string>>& builtin_dictionary() {
  static const std::map<std::string, std::vector<std::string>> dict = {
      {"a", {"AH"}},
      {"am", {"AE", "M"}},
      {"and", {"AH", "N", "D"}},
      {"are", {"AA", "R"}},
      {"day", {"D", "EY"}},
      {"days", {"D", "EY", "Z"}},
      {"excited", {"IH", "K", "S", "AY", "T", "IH", "D"}},
      {"feel", {"F", "IY", "L"}},
      {"football", {"F", "UH", "T", "B", "AO", "L"}},
      {"for", {"F", "AO", "R"}},
      {"happy", {"HH", "AE", "P", "IY"}},
      {"hello", {"HH", "AH", "L", "OW"}},
      {"i", {"AY"}},
      {"is", {"IH", "Z"}},
      {"it", {"IH", "T"}},
      {"new", {"N", "UW"}},
      {"sad", {"S", "AE", "D"}},
      {"season", {"S", "IY", "Z", "AH", "N"}},
      {"so", {"S", "OW"}},
      {"start", {"S", "T", "AA", "R", "T"}},
      {"the", {"DH", "AH"}},
      {"these", {"DH", "IY", "Z"}},
      {"this", {"DH", "IH", "S"}},
      {"to", {"T", "UW"}},
      {"today", {"T", "AH", "D", "EY"}},
      {"world", {"W", "ER", "L", "D"}},
  };
  return dict;
}

inline std::string strip_word(const std::string& token) {
  std::string out;
  for (char c : token) {
    if ((c >= 'a' && c <= 'z') || c == '\'') out.push_back(c);
    if (c >= 'A' && c <= 'Z') out.push_back(static_cast<char>(c - 'A' + 'a'));
  }
  return out;
}

}  // namespace detail

struct G2pConfig {
  std::string dictionary_path;  // optional "word PH PH ..." file
  bool letter_fallback = true;
};

class G2p {
 public:
  explicit G2p(const G2pConfig& cfg = {}) : letter_fallback_(cfg.letter_fallback) {
    dict_ = detail::builtin_dictionary();
    if (!cfg.dictionary_path.empty()) load_dictionary(cfg.dictionary_path);
  }

  void load_dictionary(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError(path.string(), "G2P dictionary");
    std::string line;
    while (std::getline(is, line)) {
      auto toks = split_whitespace(line);
      if (toks.size() < 2) continue;
      std::vector<std::string> phones(toks.begin() + 1, toks.end());
      for (auto& p : phones)  // strip stress digits
        while (!p.empty() && p.back() >= '0' && p.back() <= '9') p.pop_back();
      dict_[lowercase(toks[0])] = std::move(phones);
    }
  }

  // Converts text to a phoneme sequence. Unknown words fall back to their
  // letters (uppercased single-letter symbols); unmappable tokens collect into
  // one error.
  std::vector<std::string> phonemize(const std::string& text) const {
    std::vector<std::string> phones;
    std::vector<std::string> unmappable;
    for (const auto& raw : split_whitespace(text)) {
      const std::string word = detail::strip_word(raw);
      if (word.empty()) {
        if (raw.find_first_not_of(".,;:!?\"'()-") != std::string::npos) unmappable.push_back(raw);
        continue;
      }
      auto it = dict_.find(word);
      if (it != dict_.end()) {
        phones.insert(phones.end(), it->second.begin(), it->second.end());
      } else if (letter_fallback_) {
        for (char c : word) {
          if (c == '\'') continue;
          phones.emplace_back(1, static_cast<char>(c - 'a' + 'A'));
        }
      } else {
        unmappable.push_back(raw);
      }
    }
    if (!unmappable.empty()) {
      std::string msg = "G2P failure, unmappable tokens:";
      for (const auto& t : unmappable) msg += " '" + t + "'";
      throw Error(msg);
    }
    return phones;
  }

  // Every symbol this front end can emit; merged into the corpus inventory.
  std::vector<std::string> inventory() const {
    std::set<std::string> symbols;
    for (const auto& [_, phones] : dict_)
      for (const auto& p : phones) symbols.insert(p);
    if (letter_fallback_)
      for (char c = 'A'; c <= 'Z'; ++c) symbols.emplace(1, c);
    return {symbols.begin(), symbols.end()};
  }

 private:
  std::map<std::string, std::vector<std::string>> dict_;
  bool letter_fallback_ = true;
};

}  // namespace temotts::corpus
