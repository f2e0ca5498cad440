#pragma once

// Manifest ingestion. One JSON object per line with keys id, audio_path, text.
// Faulty records are collected, not fatal: a bad line or a missing audio file
// rejects that record and keeps the rest.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/corpus/types.hpp"

namespace temotts::corpus {

struct RecordError {
  std::size_t line = 0;
  std::string id;  // empty when the line did not parse
  std::string message;
};

struct ManifestResult {
  std::vector<Utterance> utterances;
  std::vector<RecordError> errors;
};

inline ManifestResult load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingArtifactError(path.string(), "manifest file");
  ManifestResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back({line_no, "", std::string("parse error: ") + e.what()});
      continue;
    }
    if (!j.contains("id") || !j.contains("audio_path") || !j.contains("text")) {
      result.errors.push_back({line_no, j.value("id", ""), "missing id/audio_path/text key"});
      continue;
    }
    Utterance u;
    u.id = j["id"].get<std::string>();
    u.audio_path = j["audio_path"].get<std::string>();
    u.text = j["text"].get<std::string>();
    if (!std::filesystem::exists(u.audio_path)) {
      result.errors.push_back({line_no, u.id, "audio file not found: " + u.audio_path});
      continue;
    }
    result.utterances.push_back(std::move(u));
  }
  if (result.utterances.empty() && result.errors.empty())
    log::warn("manifest is empty: " + path.string());
  return result;
}

}  // namespace temotts::corpus
