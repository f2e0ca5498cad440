#pragma once

// Iterative radix-2 complex FFT. Sizes are powers of two (the analysis FFT is
// 1024 throughout this project). Good enough at these sizes; swap in FFTW if a
// build ever needs long transforms.

#include <cmath>
#include <complex>
#include <vector>

#include "temotts/core/common.hpp"

namespace temotts::audio {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n)) throw Error("fft: size must be a power of two");
  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= static_cast<double>(n);
}

// Forward real FFT: returns the n/2 + 1 non-redundant bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  std::vector<std::complex<double>> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0};
  fft_inplace(a);
  a.resize(x.size() / 2 + 1);
  return a;
}

// Inverse of rfft for a real signal of length n.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
  if (spec.size() != n / 2 + 1) throw Error("irfft: expected n/2+1 bins");
  std::vector<std::complex<double>> a(n);
  for (std::size_t i = 0; i < spec.size(); ++i) a[i] = spec[i];
  for (std::size_t i = spec.size(); i < n; ++i) a[i] = std::conj(spec[n - i]);
  fft_inplace(a, /*inverse=*/true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i].real();
  return out;
}

}  // namespace temotts::audio
