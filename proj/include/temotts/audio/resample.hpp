#pragma once

// Windowed-sinc resampler (Hann window, 32 zero crossings total). Quality is
// ample for feature extraction at desk scale.

#include <cmath>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::audio {

inline std::vector<double> resample(const std::vector<double>& in, std::size_t from_rate,
                                    std::size_t to_rate) {
  if (from_rate == 0 || to_rate == 0) throw Error("resample: zero sample rate");
  if (from_rate == to_rate || in.empty()) return in;
  const double ratio = static_cast<double>(to_rate) / static_cast<double>(from_rate);
  const std::size_t out_len =
      static_cast<std::size_t>(std::ceil(static_cast<double>(in.size()) * ratio));
  // When downsampling, the sinc cutoff drops to the target Nyquist.
  const double cutoff = std::min(1.0, ratio);
  const int half_taps = 16;
  std::vector<double> out(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double src = static_cast<double>(i) / ratio;
    const int center = static_cast<int>(std::floor(src));
    double acc = 0.0, wsum = 0.0;
    const int span = static_cast<int>(std::ceil(half_taps / cutoff));
    for (int k = center - span; k <= center + span + 1; ++k) {
      if (k < 0 || k >= static_cast<int>(in.size())) continue;
      const double d = (src - static_cast<double>(k)) * cutoff;
      double s;
      if (std::fabs(d) < 1e-12) {
        s = 1.0;
      } else {
        s = std::sin(M_PI * d) / (M_PI * d);
      }
      const double frac = d / half_taps;
      if (std::fabs(frac) >= 1.0) continue;
      const double w = 0.5 * (1.0 + std::cos(M_PI * frac));
      acc += in[static_cast<std::size_t>(k)] * s * w * cutoff;
      wsum += 1.0;
    }
    out[i] = wsum > 0.0 ? acc : 0.0;
  }
  return out;
}

}  // namespace temotts::audio
