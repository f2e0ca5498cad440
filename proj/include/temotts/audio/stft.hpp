#pragma once

// Short-time Fourier analysis with the framing convention used across the
// project: center padding (reflected), periodic Hann window, frame count
// 1 + floor(len / hop).

#include <complex>
#include <vector>

#include "temotts/audio/fft.hpp"

namespace temotts::audio {

struct StftConfig {
  std::size_t n_fft = 1024;
  std::size_t win_length = 1024;
  std::size_t hop = 256;
  bool center = true;
};

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n)));
  return w;
}

inline std::size_t stft_frame_count(std::size_t samples, const StftConfig& cfg) {
  if (cfg.center) return samples / cfg.hop + 1;
  if (samples < cfg.win_length) return 0;
  return (samples - cfg.win_length) / cfg.hop + 1;
}

inline std::vector<double> reflect_pad(const std::vector<double>& x, std::size_t pad) {
  if (x.size() <= pad) throw Error("audio too short");
  std::vector<double> out;
  out.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i > 0; --i) out.push_back(x[i]);
  out.insert(out.end(), x.begin(), x.end());
  for (std::size_t i = 2; i <= pad + 1; ++i) out.push_back(x[x.size() - i]);
  return out;
}

// Magnitude spectrogram, frames x (n_fft/2 + 1), row-major.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> mag;

  double& at(std::size_t f, std::size_t b) { return mag[f * bins + b]; }
  double at(std::size_t f, std::size_t b) const { return mag[f * bins + b]; }
};

inline Spectrogram stft_magnitude(const std::vector<double>& waveform, const StftConfig& cfg) {
  if (waveform.empty()) throw Error("audio too short");
  if (waveform.size() < cfg.win_length) throw Error("audio too short");
  if (cfg.win_length > cfg.n_fft) throw Error("stft: win_length exceeds n_fft");
  const std::vector<double> window = hann_window(cfg.win_length);
  const std::vector<double> x = cfg.center ? reflect_pad(waveform, cfg.n_fft / 2) : waveform;
  const std::size_t frames = stft_frame_count(waveform.size(), cfg);
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const std::size_t win_off = (cfg.n_fft - cfg.win_length) / 2;

  Spectrogram spec;
  spec.frames = frames;
  spec.bins = bins;
  spec.mag.resize(frames * bins);
  std::vector<double> frame(cfg.n_fft);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * cfg.hop;
    std::fill(frame.begin(), frame.end(), 0.0);
    for (std::size_t i = 0; i < cfg.win_length; ++i) {
      const std::size_t src = start + win_off + i;
      if (src < x.size()) frame[win_off + i] = x[src] * window[i];
    }
    const auto bins_c = rfft(frame);
    for (std::size_t b = 0; b < bins; ++b) spec.mag[f * bins + b] = std::abs(bins_c[b]);
  }
  return spec;
}

// Overlap-add inverse of stft_magnitude given full complex frames.
inline std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames,
                                 const StftConfig& cfg, std::size_t out_samples) {
  const std::vector<double> window = hann_window(cfg.win_length);
  const std::size_t pad = cfg.center ? cfg.n_fft / 2 : 0;
  const std::size_t total = (frames.size() - 1) * cfg.hop + cfg.n_fft;
  std::vector<double> acc(total, 0.0), wsum(total, 0.0);
  const std::size_t win_off = (cfg.n_fft - cfg.win_length) / 2;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto time = irfft(frames[f], cfg.n_fft);
    const std::size_t start = f * cfg.hop;
    for (std::size_t i = 0; i < cfg.win_length; ++i) {
      acc[start + win_off + i] += time[win_off + i] * window[i];
      wsum[start + win_off + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(out_samples, 0.0);
  for (std::size_t i = 0; i < out_samples; ++i) {
    const std::size_t j = i + pad;
    if (j < acc.size() && wsum[j] > 1e-9) out[i] = acc[j] / wsum[j];
  }
  return out;
}

}  // namespace temotts::audio
