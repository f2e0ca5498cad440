#pragma once

// Frame-wise F0 estimation by normalized autocorrelation with parabolic peak
// interpolation. Unvoiced frames (weak periodicity or silence) report 0 Hz.

#include <cmath>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::audio {

struct PitchConfig {
  std::size_t sample_rate = 22050;
  double window_sec = 0.025;
  std::size_t hop = 256;
  double fmin = 60.0;
  double fmax = 400.0;
  double voicing_threshold = 0.3;
  double energy_floor = 1e-8;
};

struct F0Track {
  std::vector<double> times;  // frame centers, seconds
  std::vector<double> f0;     // Hz, 0 when unvoiced
};

inline F0Track extract_f0(const std::vector<double>& waveform, const PitchConfig& cfg) {
  const auto win = static_cast<std::size_t>(cfg.window_sec * static_cast<double>(cfg.sample_rate));
  if (waveform.size() < win) throw Error("audio too short for pitch analysis");
  const auto lag_min = static_cast<std::size_t>(static_cast<double>(cfg.sample_rate) / cfg.fmax);
  const auto lag_max = static_cast<std::size_t>(static_cast<double>(cfg.sample_rate) / cfg.fmin);
  const std::size_t frames = (waveform.size() - win) / cfg.hop + 1;

  F0Track track;
  track.times.resize(frames);
  track.f0.assign(frames, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t start = f * cfg.hop;
    track.times[f] = (static_cast<double>(start) + static_cast<double>(win) / 2.0) /
                     static_cast<double>(cfg.sample_rate);
    double r0 = 0.0;
    for (std::size_t i = 0; i < win; ++i) r0 += waveform[start + i] * waveform[start + i];
    if (r0 < cfg.energy_floor) continue;  // silence

    double best_r = 0.0, prev_r = 0.0, next_r = 0.0;
    std::size_t best_lag = 0;
    std::vector<double> rs(lag_max + 2, 0.0);
    const std::size_t hi = std::min(lag_max + 1, win - 1);
    for (std::size_t lag = lag_min > 1 ? lag_min - 1 : 1; lag <= hi; ++lag) {
      double r = 0.0;
      for (std::size_t i = 0; i + lag < win; ++i)
        r += waveform[start + i] * waveform[start + i + lag];
      rs[lag] = r / r0;
    }
    for (std::size_t lag = lag_min; lag <= std::min(lag_max, hi - 1); ++lag) {
      if (rs[lag] > best_r && rs[lag] >= rs[lag - 1] && rs[lag] >= rs[lag + 1]) {
        best_r = rs[lag];
        best_lag = lag;
        prev_r = rs[lag - 1];
        next_r = rs[lag + 1];
      }
    }
    if (best_lag == 0 || best_r < cfg.voicing_threshold) continue;

    // parabolic interpolation around the peak
    double lag_refined = static_cast<double>(best_lag);
    const double denom = prev_r - 2.0 * best_r + next_r;
    if (std::fabs(denom) > 1e-12) {
      const double delta = 0.5 * (prev_r - next_r) / denom;
      if (std::fabs(delta) < 1.0) lag_refined += delta;
    }
    track.f0[f] = static_cast<double>(cfg.sample_rate) / lag_refined;
  }
  return track;
}

}  // namespace temotts::audio
