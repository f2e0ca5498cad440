#pragma once

// Feature extraction and on-disk cache. Preprocessing turns each utterance
// into a feature record (log-mel, integer durations, phoneme-level pitch and
// energy) stored as one tensor-store file keyed by utterance id and the
// feature-config hash, so reruns with an unchanged config skip extraction.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/audio/mel.hpp"
#include "temotts/audio/pitch.hpp"
#include "temotts/audio/resample.hpp"
#include "temotts/audio/wav.hpp"
#include "temotts/core/common.hpp"
#include "temotts/core/serialize.hpp"
#include "temotts/corpus/align.hpp"
#include "temotts/corpus/types.hpp"

namespace temotts::corpus {

struct FeatureConfig {
  audio::MelConfig mel;
  audio::PitchConfig pitch;
  AlignConfig align;

  nlohmann::json to_json() const {
    return {{"mel", mel.to_json()},
            {"pitch",
             {{"window_sec", pitch.window_sec},
              {"fmin", pitch.fmin},
              {"fmax", pitch.fmax},
              {"voicing_threshold", pitch.voicing_threshold}}},
            {"align",
             {{"durations_in_seconds", align.durations_in_seconds},
              {"max_mismatch_fraction", align.max_mismatch_fraction}}}};
  }

  // Cache key: any change in extraction parameters invalidates cached files.
  std::string hash() const { return to_hex(fnv1a64(to_json().dump())); }
};

// One utterance's trainable features. Pitch/energy live at phoneme level
// (means over the phoneme's frames), matching where the variance predictors
// operate.
struct FeatureRecord {
  std::string id;
  std::string text;
  std::vector<std::string> phonemes;
  std::vector<std::size_t> durations;
  audio::MelSpectrogram mel;
  std::vector<double> pitch;   // mean log-F0 over voiced frames, 0 if none
  std::vector<double> energy;  // mean frame energy
};

// Frame-level -> phoneme-level aggregation. Pitch uses the mean of log-F0
// over the phoneme's *voiced* frames only (0.0 when the phoneme has no
// voiced frame); energy is a plain mean.
inline void aggregate_phoneme_prosody(FeatureRecord& rec, const std::vector<double>& f0,
                                      const std::vector<double>& frame_energy) {
  rec.pitch.assign(rec.durations.size(), 0.0);
  rec.energy.assign(rec.durations.size(), 0.0);
  std::size_t frame = 0;
  for (std::size_t p = 0; p < rec.durations.size(); ++p) {
    double log_f0_sum = 0.0;
    std::size_t voiced = 0;
    double energy_sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < rec.durations[p]; ++k, ++frame) {
      if (frame < f0.size() && f0[frame] > 0.0) {
        log_f0_sum += std::log(f0[frame]);
        ++voiced;
      }
      if (frame < frame_energy.size()) {
        energy_sum += frame_energy[frame];
        ++n;
      }
    }
    if (voiced > 0) rec.pitch[p] = log_f0_sum / static_cast<double>(voiced);
    if (n > 0) rec.energy[p] = energy_sum / static_cast<double>(n);
  }
}

// Full single-utterance extraction: load audio, resample to the configured
// rate, compute log-mel / frame energies / F0, apply the alignment, then
// aggregate prosody to phoneme level.
inline FeatureRecord extract_features(const Utterance& utt_in, const AlignedPhones& aligned,
                                      const FeatureConfig& cfg) {
  Utterance utt = utt_in;
  if (utt.waveform.empty()) {
    auto wav = audio::read_wav(utt.audio_path);
    utt.waveform = wav.sample_rate == cfg.mel.sample_rate
                       ? std::move(wav.samples)
                       : audio::resample(wav.samples, wav.sample_rate, cfg.mel.sample_rate);
  }

  utt.mel = audio::compute_mel(utt.waveform, cfg.mel);
  const auto spec = audio::stft_magnitude(utt.waveform, cfg.mel.stft());
  const auto energies = audio::frame_energies(spec);

  audio::PitchConfig pitch_cfg = cfg.pitch;
  pitch_cfg.sample_rate = cfg.mel.sample_rate;
  pitch_cfg.hop = cfg.mel.hop;
  const auto f0 = audio::extract_f0(utt.waveform, pitch_cfg);

  apply_alignment(utt, aligned, cfg.align);

  FeatureRecord rec;
  rec.id = utt.id;
  rec.text = utt.text;
  rec.phonemes = utt.phonemes;
  rec.durations = utt.durations;
  rec.mel = std::move(*utt.mel);
  aggregate_phoneme_prosody(rec, f0.f0, energies);
  return rec;
}

// ---- cache ----------------------------------------------------------------

inline std::filesystem::path feature_cache_path(const std::filesystem::path& cache_dir,
                                                const std::string& id, const FeatureConfig& cfg) {
  return cache_dir / (id + "-" + cfg.hash() + ".ftr");
}

inline void save_feature_record(const FeatureRecord& rec, const std::filesystem::path& path) {
  TensorStore store;
  store.meta["id"] = rec.id;
  store.meta["text"] = rec.text;
  store.meta["phonemes"] = rec.phonemes;
  store.meta["hop_length"] = rec.mel.hop;

  store.add("mel", nn::Tensor::make({rec.mel.frames, rec.mel.n_mels}, rec.mel.values));

  std::vector<double> dur(rec.durations.size());
  for (std::size_t i = 0; i < rec.durations.size(); ++i) dur[i] = static_cast<double>(rec.durations[i]);
  store.add("durations", nn::Tensor::make({rec.durations.size()}, std::move(dur)));
  store.add("pitch", nn::Tensor::make({rec.pitch.size()}, rec.pitch));
  store.add("energy", nn::Tensor::make({rec.energy.size()}, rec.energy));

  save_tensor_store(path, store);
}

inline FeatureRecord load_feature_record(const std::filesystem::path& path) {
  auto store = load_tensor_store(path);
  FeatureRecord rec;
  rec.id = store.meta.at("id").get<std::string>();
  rec.text = store.meta.at("text").get<std::string>();
  rec.phonemes = store.meta.at("phonemes").get<std::vector<std::string>>();

  const nn::Tensor* mel = store.find("mel");
  const nn::Tensor* dur = store.find("durations");
  const nn::Tensor* pitch = store.find("pitch");
  const nn::Tensor* energy = store.find("energy");
  if (!mel || !dur || !pitch || !energy)
    throw Error(path.string() + ": feature record is missing tensors");

  rec.mel.frames = mel->shape()[0];
  rec.mel.n_mels = mel->shape()[1];
  rec.mel.hop = store.meta.value("hop_length", std::size_t{256});
  rec.mel.values = mel->data();

  for (double d : dur->data()) rec.durations.push_back(static_cast<std::size_t>(std::llround(d)));
  rec.pitch = pitch->data();
  rec.energy = energy->data();

  if (rec.phonemes.size() != rec.durations.size())
    throw Error(path.string() + ": phoneme/duration length mismatch in cached record");
  return rec;
}

// Cached wrapper: if "<cache>/<id>-<hash>.ftr" exists it is loaded, otherwise
// features are extracted and written. `extracted` reports whether work was
// actually done (used by the CLI to print cache statistics).
inline FeatureRecord extract_features_cached(const Utterance& utt, const AlignedPhones& aligned,
                                             const FeatureConfig& cfg,
                                             const std::filesystem::path& cache_dir,
                                             bool* extracted = nullptr) {
  const auto path = feature_cache_path(cache_dir, utt.id, cfg);
  if (std::filesystem::exists(path)) {
    if (extracted) *extracted = false;
    return load_feature_record(path);
  }
  auto rec = extract_features(utt, aligned, cfg);
  std::filesystem::create_directories(cache_dir);
  save_feature_record(rec, path);
  if (extracted) *extracted = true;
  return rec;
}

}  // namespace temotts::corpus
