// emoanim/fft.hpp

// Copyright 2026  Emoanim Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef EMOANIM_FFT_HPP_
#define EMOANIM_FFT_HPP_

#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace emoanim {

// In-place iterative radix-2 FFT. Size must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft size must be a nonzero power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = a[i + k];
        std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// |X_k|^2 for k = 0..nfft/2 of a real frame zero-padded to nfft samples.
inline std::vector<double> power_spectrum(std::span<const double> frame,
                                          std::size_t nfft) {
  if (frame.size() > nfft)
    throw std::invalid_argument("frame longer than FFT size");
  std::vector<std::complex<double>> a(nfft, {0.0, 0.0});
  for (std::size_t i = 0; i < frame.size(); ++i) a[i] = {frame[i], 0.0};
  fft_inplace(a);
  std::vector<double> p(nfft / 2 + 1);
  for (std::size_t k = 0; k <= nfft / 2; ++k) p[k] = std::norm(a[k]);
  return p;
}

}  // namespace emoanim

#endif  // EMOANIM_FFT_HPP_
