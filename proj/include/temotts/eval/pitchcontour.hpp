#pragma once

// Pitch-contour extraction for figure-style comparisons; thin wrapper over
// the autocorrelation F0 tracker plus CSV output.

#include <filesystem>
#include <fstream>
#include <vector>

#include "temotts/audio/pitch.hpp"
#include "temotts/core/common.hpp"

namespace temotts::eval {

struct PitchContour {
  std::vector<double> times;  // seconds, strictly increasing
  std::vector<double> f0;     // Hz, 0 when unvoiced
};

inline PitchContour extract_pitch_contour(const std::vector<double>& waveform,
                                          std::size_t sample_rate,
                                          audio::PitchConfig cfg = {}) {
  cfg.sample_rate = sample_rate;
  const audio::F0Track track = audio::extract_f0(waveform, cfg);
  return PitchContour{track.times, track.f0};
}

inline double median_voiced_f0(const PitchContour& c) {
  std::vector<double> voiced;
  for (double f : c.f0)
    if (f > 0.0) voiced.push_back(f);
  if (voiced.empty()) return 0.0;
  std::sort(voiced.begin(), voiced.end());
  const std::size_t n = voiced.size();
  return n % 2 ? voiced[n / 2] : 0.5 * (voiced[n / 2 - 1] + voiced[n / 2]);
}

inline void write_contour_csv(const std::filesystem::path& path, const PitchContour& c) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open for writing: " + path.string());
  os << "time_s,f0_hz\n";
  os.precision(10);
  for (std::size_t i = 0; i < c.times.size(); ++i) os << c.times[i] << ',' << c.f0[i] << '\n';
}

}  // namespace temotts::eval
