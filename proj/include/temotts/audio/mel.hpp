#pragma once

// Log-mel spectrogram extraction. Slaney-style mel scale and area-normalized
// triangular filters (librosa-compatible); energies are clamped at a floor
// before the natural log so silence stays finite.

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "temotts/audio/stft.hpp"

namespace temotts::audio {

struct MelConfig {
  std::size_t sample_rate = 22050;
  std::size_t n_fft = 1024;
  std::size_t win_length = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-10;
  bool center = true;

  StftConfig stft() const { return StftConfig{n_fft, win_length, hop, center}; }

  nlohmann::json to_json() const {
    return {{"sample_rate", sample_rate}, {"n_fft", n_fft},   {"win_length", win_length},
            {"hop", hop},                 {"n_mels", n_mels}, {"fmin", fmin},
            {"fmax", fmax},               {"log_floor", log_floor}, {"center", center}};
  }

  static MelConfig from_json(const nlohmann::json& j) {
    MelConfig c;
    c.sample_rate = j.value("sample_rate", c.sample_rate);
    c.n_fft = j.value("n_fft", c.n_fft);
    c.win_length = j.value("win_length", c.win_length);
    c.hop = j.value("hop", c.hop);
    c.n_mels = j.value("n_mels", c.n_mels);
    c.fmin = j.value("fmin", c.fmin);
    c.fmax = j.value("fmax", c.fmax);
    c.log_floor = j.value("log_floor", c.log_floor);
    c.center = j.value("center", c.center);
    return c;
  }

  std::string hash() const { return to_hex(fnv1a64(to_json().dump())); }
};

// frame_count x n_mels matrix of log-mel energies, row-major.
struct MelSpectrogram {
  std::size_t frames = 0;
  std::size_t n_mels = 0;
  std::size_t hop = 256;
  std::vector<double> values;

  double& at(std::size_t f, std::size_t m) { return values[f * n_mels + m]; }
  double at(std::size_t f, std::size_t m) const { return values[f * n_mels + m]; }
  bool empty() const { return frames == 0; }
};

inline double hz_to_mel(double hz) {
  // Slaney: linear below 1 kHz, logarithmic above.
  constexpr double min_log_hz = 1000.0;
  constexpr double lin_scale = 200.0 / 3.0;
  constexpr double min_log_mel = min_log_hz / lin_scale;
  const double log_step = std::log(6.4) / 27.0;
  if (hz < min_log_hz) return hz / lin_scale;
  return min_log_mel + std::log(hz / min_log_hz) / log_step;
}

inline double mel_to_hz(double mel) {
  constexpr double min_log_hz = 1000.0;
  constexpr double lin_scale = 200.0 / 3.0;
  constexpr double min_log_mel = min_log_hz / lin_scale;
  const double log_step = std::log(6.4) / 27.0;
  if (mel < min_log_mel) return mel * lin_scale;
  return min_log_hz * std::exp((mel - min_log_mel) * log_step);
}

// n_mels x (n_fft/2 + 1) filter matrix, row-major.
inline std::vector<double> mel_filterbank(const MelConfig& cfg) {
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> mel_f(cfg.n_mels + 2);
  for (std::size_t i = 0; i < mel_f.size(); ++i)
    mel_f[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                      static_cast<double>(cfg.n_mels + 1));
  std::vector<double> fft_freqs(bins);
  for (std::size_t k = 0; k < bins; ++k)
    fft_freqs[k] = static_cast<double>(k) * static_cast<double>(cfg.sample_rate) /
                   static_cast<double>(cfg.n_fft);
  std::vector<double> fb(cfg.n_mels * bins, 0.0);
  for (std::size_t m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_f[m], mid = mel_f[m + 1], hi = mel_f[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (std::size_t k = 0; k < bins; ++k) {
      const double lower = (fft_freqs[k] - lo) / (mid - lo);
      const double upper = (hi - fft_freqs[k]) / (hi - mid);
      fb[m * bins + k] = std::max(0.0, std::min(lower, upper)) * enorm;
    }
  }
  return fb;
}

// Log-mel spectrogram of a 22.05 kHz waveform. Deterministic: identical
// waveform and config give bit-identical output.
inline MelSpectrogram compute_mel(const std::vector<double>& waveform, const MelConfig& cfg) {
  const Spectrogram spec = stft_magnitude(waveform, cfg.stft());
  const std::vector<double> fb = mel_filterbank(cfg);
  MelSpectrogram mel;
  mel.frames = spec.frames;
  mel.n_mels = cfg.n_mels;
  mel.hop = cfg.hop;
  mel.values.resize(spec.frames * cfg.n_mels);
  for (std::size_t f = 0; f < spec.frames; ++f)
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < spec.bins; ++b)
        acc += fb[m * spec.bins + b] * spec.mag[f * spec.bins + b];
      mel.values[f * cfg.n_mels + m] = std::log(std::max(acc, cfg.log_floor));
    }
  return mel;
}

// Per-frame energy: L2 norm of the magnitude spectrum.
inline std::vector<double> frame_energies(const Spectrogram& spec) {
  std::vector<double> e(spec.frames, 0.0);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    double acc = 0.0;
    for (std::size_t b = 0; b < spec.bins; ++b) acc += spec.at(f, b) * spec.at(f, b);
    e[f] = std::sqrt(acc);
  }
  return e;
}

}  // namespace temotts::audio
