#pragma once

#include <optional>
#include <string>
#include <vector>

#include "temotts/audio/mel.hpp"

namespace temotts::corpus {

// One audio-text training example. Waveform/phonemes/durations/mel are filled
// in progressively by ingestion, alignment and preprocessing.
struct Utterance {
  std::string id;
  std::string audio_path;
  std::string text;
  std::vector<double> waveform;  // 22050 Hz once loaded
  std::vector<std::string> phonemes;
  std::vector<std::size_t> durations;  // frames, one per phoneme
  std::optional<audio::MelSpectrogram> mel;

  bool has_alignment() const { return !phonemes.empty() && durations.size() == phonemes.size(); }
};

struct CorpusSplit {
  std::vector<std::string> train, val, test;

  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

}  // namespace temotts::corpus
