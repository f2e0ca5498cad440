#pragma once

// Emotion data pruning: keep only utterances whose text is classified
// confidently (dominant probability strictly above the threshold). The
// survivors seed stage-II training.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/core/common.hpp"
#include "temotts/corpus/types.hpp"
#include "temotts/emotion/provider.hpp"

namespace temotts::emotion {

struct PruningConfig {
  double threshold = 0.7;

  void validate() const {
    if (!(threshold > 0.0 && threshold < 1.0))
      throw Error("pruning threshold must lie in (0, 1), got " + std::to_string(threshold));
  }
};

struct PruneResult {
  std::vector<corpus::Utterance> kept;                 // input order preserved
  std::map<std::string, EmotionAnalysis> analyses;     // id -> analysis, kept only
  nlohmann::json report;
};

// Strict inequality: dominant_prob exactly at the threshold is dropped.
inline PruneResult prune_corpus(const std::vector<corpus::Utterance>& utts,
                                const EmotionProvider& provider, const PruningConfig& cfg) {
  cfg.validate();
  PruneResult out;
  std::map<std::string, std::size_t> kept_per_class, dropped_per_class;
  std::vector<std::string> kept_ids;
  std::size_t failures = 0;

  for (const auto& utt : utts) {
    EmotionAnalysis analysis;
    try {
      analysis = provider.classify(utt.text);
    } catch (const std::exception& e) {
      log::warn("pruning: provider failed on '" + utt.id + "': " + e.what());
      ++failures;
      continue;
    }
    if (analysis.dominant_prob > cfg.threshold) {
      kept_per_class[analysis.dominant_class] += 1;
      kept_ids.push_back(utt.id);
      out.analyses[utt.id] = analysis;
      out.kept.push_back(utt);
    } else {
      dropped_per_class[analysis.dominant_class] += 1;
    }
  }

  out.report = {{"threshold", cfg.threshold},
                {"input_count", utts.size()},
                {"kept_count", out.kept.size()},
                {"provider_failures", failures},
                {"kept_per_class", kept_per_class},
                {"dropped_per_class", dropped_per_class},
                {"kept_ids", kept_ids}};
  return out;
}

}  // namespace temotts::emotion
