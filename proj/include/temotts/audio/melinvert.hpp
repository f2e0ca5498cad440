#pragma once

// Spectral-inversion fallback vocoder: log-mel -> linear magnitude via the
// filterbank's right pseudo-inverse, then Griffin-Lim phase recovery.

#include <complex>
#include <random>
#include <vector>

#include "temotts/audio/mel.hpp"

namespace temotts::audio {

// Solves A x = b in-place by Gauss-Jordan with partial pivoting; A is n x n.
inline std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b,
                                        std::size_t n) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-14) throw Error("mel pseudo-inverse: singular system");
    if (piv != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a[col * n + c], a[piv * n + c]);
      std::swap(b[col], b[piv]);
    }
    const double d = a[col * n + col];
    for (std::size_t c = 0; c < n; ++c) a[col * n + c] /= d;
    b[col] /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r * n + col];
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
      b[r] -= f * b[col];
    }
  }
  return b;
}

// Right pseudo-inverse M^T (M M^T)^-1 of the n_mels x bins filterbank,
// returned as bins x n_mels row-major.
inline std::vector<double> mel_pseudo_inverse(const MelConfig& cfg) {
  const std::vector<double> fb = mel_filterbank(cfg);
  const std::size_t m = cfg.n_mels, bins = cfg.n_fft / 2 + 1;
  std::vector<double> gram(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t b = 0; b < bins; ++b) acc += fb[i * bins + b] * fb[j * bins + b];
      gram[i * m + j] = acc;
    }
  for (std::size_t i = 0; i < m; ++i) gram[i * m + i] += 1e-8;  // ridge
  // columns of (M M^T)^-1 via m solves, then M^T on the left
  std::vector<double> gram_inv(m * m);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> e(m, 0.0);
    e[j] = 1.0;
    const auto col = solve_linear(gram, std::move(e), m);
    for (std::size_t i = 0; i < m; ++i) gram_inv[i * m + j] = col[i];
  }
  std::vector<double> pinv(bins * m, 0.0);
  for (std::size_t b = 0; b < bins; ++b)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += fb[i * bins + b] * gram_inv[i * m + j];
      pinv[b * m + j] = acc;
    }
  return pinv;
}

struct GriffinLimConfig {
  std::size_t iterations = 32;
  std::uint64_t phase_seed = 0;  // deterministic phase init
};

inline std::vector<double> mel_to_waveform(const MelSpectrogram& mel, const MelConfig& cfg,
                                           const GriffinLimConfig& gl = {}) {
  if (mel.frames == 0) throw Error("mel_to_waveform: empty mel");
  const std::size_t bins = cfg.n_fft / 2 + 1;
  const std::vector<double> pinv = mel_pseudo_inverse(cfg);

  // log-mel -> mel energy -> linear magnitude (clamped non-negative)
  std::vector<double> target_mag(mel.frames * bins, 0.0);
  for (std::size_t f = 0; f < mel.frames; ++f)
    for (std::size_t b = 0; b < bins; ++b) {
      double acc = 0.0;
      for (std::size_t m = 0; m < cfg.n_mels; ++m)
        acc += pinv[b * cfg.n_mels + m] * std::exp(mel.at(f, m));
      target_mag[f * bins + b] = std::max(acc, 0.0);
    }

  const std::size_t samples = (mel.frames - 1) * cfg.hop;
  const std::size_t out_samples = samples == 0 ? cfg.hop : samples;
  const StftConfig stft_cfg = cfg.stft();

  std::mt19937_64 rng(gl.phase_seed);
  std::uniform_real_distribution<double> uni(-M_PI, M_PI);
  std::vector<std::vector<std::complex<double>>> frames(mel.frames);
  for (std::size_t f = 0; f < mel.frames; ++f) {
    frames[f].resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
      const double phase = uni(rng);
      frames[f][b] = std::polar(target_mag[f * bins + b], phase);
    }
  }

  // Complex STFT with the project framing convention (phase retained).
  const auto complex_stft = [&stft_cfg](const std::vector<double>& wave) {
    const std::vector<double> window = hann_window(stft_cfg.win_length);
    const std::vector<double> x = stft_cfg.center ? reflect_pad(wave, stft_cfg.n_fft / 2) : wave;
    const std::size_t nframes = stft_frame_count(wave.size(), stft_cfg);
    std::vector<std::vector<std::complex<double>>> out(nframes);
    std::vector<double> frame(stft_cfg.n_fft);
    const std::size_t win_off = (stft_cfg.n_fft - stft_cfg.win_length) / 2;
    for (std::size_t f = 0; f < nframes; ++f) {
      std::fill(frame.begin(), frame.end(), 0.0);
      const std::size_t start = f * stft_cfg.hop;
      for (std::size_t i = 0; i < stft_cfg.win_length; ++i)
        frame[win_off + i] = x[start + win_off + i] * window[i];
      out[f] = rfft(frame);
    }
    return out;
  };

  std::vector<double> wav;
  for (std::size_t it = 0; it < gl.iterations; ++it) {
    wav = istft(frames, stft_cfg, out_samples);
    if (wav.size() < stft_cfg.win_length) wav.resize(stft_cfg.win_length, 0.0);
    const auto reproj = complex_stft(wav);
    // keep the target magnitudes, adopt the reprojected phases
    for (std::size_t f = 0; f < mel.frames; ++f)
      for (std::size_t b = 0; b < bins; ++b) {
        const std::complex<double> c = f < reproj.size() ? reproj[f][b] : frames[f][b];
        const double mag = std::abs(c);
        frames[f][b] = mag > 1e-12 ? c / mag * target_mag[f * bins + b]
                                   : std::complex<double>(target_mag[f * bins + b], 0.0);
      }
  }
  wav = istft(frames, stft_cfg, out_samples);

  // normalize peak to 0.95 to avoid clipping on WAV write
  double peak = 0.0;
  for (double s : wav) peak = std::max(peak, std::fabs(s));
  if (peak > 1e-9)
    for (double& s : wav) s *= 0.95 / peak;
  return wav;
}

}  // namespace temotts::audio
