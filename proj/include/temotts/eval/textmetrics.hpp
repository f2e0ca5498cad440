#pragma once

// Intelligibility metrics over externally produced transcripts: character and
// word error rates with unit-cost Levenshtein distance. Both operate on
// normalized text (lowercase, punctuation stripped, whitespace collapsed);
// CER counts UTF-8 codepoints, not bytes.

#include <algorithm>
#include <string>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::eval {

struct TranscriptPair {
  std::string reference;
  std::string hypothesis;
};

inline bool is_ascii_punct(unsigned char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
         (c >= '{' && c <= '~');
}

inline std::string normalize_transcript(const std::string& text) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && is_ascii_punct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a')
                                       : static_cast<char>(c));
  }
  return out;
}

// Splits into UTF-8 codepoints (continuation bytes 10xxxxxx attach to the
// preceding lead byte).
inline std::vector<std::string> utf8_codepoints(const std::string& s) {
  std::vector<std::string> out;
  for (unsigned char c : s) {
    if ((c & 0xC0) == 0x80 && !out.empty())
      out.back().push_back(static_cast<char>(c));
    else
      out.emplace_back(1, static_cast<char>(c));
  }
  return out;
}

template <typename Seq>
std::size_t levenshtein(const Seq& a, const Seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline double cer(const TranscriptPair& pair) {
  const auto ref = utf8_codepoints(normalize_transcript(pair.reference));
  const auto hyp = utf8_codepoints(normalize_transcript(pair.hypothesis));
  if (ref.empty()) throw Error("cer: reference is empty after normalization");
  return static_cast<double>(levenshtein(ref, hyp)) / static_cast<double>(ref.size());
}

inline double wer(const TranscriptPair& pair) {
  const auto ref = split_whitespace(normalize_transcript(pair.reference));
  const auto hyp = split_whitespace(normalize_transcript(pair.hypothesis));
  if (ref.empty()) throw Error("wer: reference is empty after normalization");
  return static_cast<double>(levenshtein(ref, hyp)) / static_cast<double>(ref.size());
}

}  // namespace temotts::eval
