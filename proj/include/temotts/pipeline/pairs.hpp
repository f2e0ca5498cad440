#pragma once

// Stage-II dataset construction: for every pruned utterance, pair the
// provider's text embedding with the GST weights the frozen stage-I model
// assigns to the utterance's ground-truth mel. Persisted as JSON-lines with a
// metadata header carrying the provenance fingerprints.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/adaptation/net.hpp"
#include "temotts/corpus/features.hpp"
#include "temotts/emotion/provider.hpp"
#include "temotts/pipeline/checkpoint.hpp"

namespace temotts::pipeline {

struct PairDataset {
  std::vector<adaptation::WeightPair> pairs;
  std::vector<std::string> classes;  // dominant emotion per pair, for plots
  nlohmann::json meta;
};

inline PairDataset build_stage2_dataset(const Stage1Bundle& bundle,
                                        const std::vector<corpus::FeatureRecord>& pruned_records,
                                        const emotion::EmotionProvider& provider) {
  if (pruned_records.empty()) throw Error("stage II requires pruned data");
  PairDataset out;
  std::size_t failures = 0;
  for (const auto& rec : pruned_records) {
    try {
      adaptation::WeightPair p;
      p.id = rec.id;
      p.embedding = provider.embed(rec.text);
      p.target_weights = bundle.gst.extract_weights(rec.mel);
      std::string cls = provider.classify(rec.text).dominant_class;
      out.pairs.push_back(std::move(p));
      out.classes.push_back(std::move(cls));
    } catch (const std::exception& e) {
      log::warn("build-pairs: '" + rec.id + "' failed: " + e.what());
      ++failures;
    }
  }
  if (out.pairs.empty()) throw Error("stage II requires pruned data (all pair builds failed)");
  out.meta = {{"stage1_fingerprint", bundle.source_fingerprint},
              {"provider_id", provider.id()},
              {"count", out.pairs.size()},
              {"failures", failures},
              {"embedding_dim", out.pairs.front().embedding.size()},
              {"n_tokens", out.pairs.front().target_weights.size()}};
  return out;
}

// Line 1: {"meta": {...}}; then one {"id", "embedding", "target_weights"} per
// pair.
inline void save_pairs(const std::filesystem::path& path, const PairDataset& ds) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << nlohmann::json{{"meta", ds.meta}}.dump() << '\n';
  for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
    const auto& p = ds.pairs[i];
    nlohmann::json j{{"id", p.id},
                     {"embedding", p.embedding},
                     {"target_weights", p.target_weights}};
    if (i < ds.classes.size()) j["class"] = ds.classes[i];
    os << j.dump() << '\n';
  }
  if (!os) throw Error("write failed: " + path.string());
}

inline PairDataset load_pairs(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError(path.string(), "stage-II pair dataset (run build-pairs)");
  PairDataset ds;
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
    if (j.contains("meta")) {
      ds.meta = j.at("meta");
      continue;
    }
    adaptation::WeightPair p;
    p.id = j.at("id").get<std::string>();
    p.embedding = j.at("embedding").get<std::vector<double>>();
    p.target_weights = j.at("target_weights").get<std::vector<double>>();
    ds.pairs.push_back(std::move(p));
    ds.classes.push_back(j.value("class", std::string{}));
  }
  if (ds.pairs.empty()) throw Error(path.string() + ": no pairs found");
  return ds;
}

}  // namespace temotts::pipeline
