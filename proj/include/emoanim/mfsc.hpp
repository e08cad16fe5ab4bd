// emoanim/mfsc.hpp

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

// Log mel-filterbank energies (MFSC) at a 100 Hz frame rate, corpus z-score
// normalization, and the sliding spectral-image windows fed to the networks.

#ifndef EMOANIM_MFSC_HPP_
#define EMOANIM_MFSC_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "emoanim/fft.hpp"
#include "emoanim/wav.hpp"
#include "json.hpp"

namespace emoanim {

struct FrontendConfig {
  int analysis_rate = 16000;   // audio is resampled to this rate first
  double window_ms = 25.0;
  double hop_ms = 10.0;        // 10 ms hop = 100 frames/s
  double preemphasis = 0.97;
  int fft_size = 512;
  int mel_bands = 40;
  double mel_low_hz = 0.0;
  double mel_high_hz = 0.0;    // 0 means analysis_rate / 2
  double log_floor = 1e-10;    // energy floor before the log

  double frame_rate() const { return 1000.0 / hop_ms; }
  double high_hz() const {
    return mel_high_hz > 0.0 ? mel_high_hz : analysis_rate / 2.0;
  }

  void validate() const {
    if (analysis_rate <= 0) throw std::invalid_argument("analysis_rate <= 0");
    if (hop_ms <= 0 || window_ms < hop_ms)
      throw std::invalid_argument("need window_ms >= hop_ms > 0");
    if (mel_bands <= 0) throw std::invalid_argument("mel_bands <= 0");
    if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
      throw std::invalid_argument("fft_size must be a power of two");
    if (high_hz() <= mel_low_hz)
      throw std::invalid_argument("mel band range is empty");
    if (high_hz() > analysis_rate / 2.0)
      throw std::invalid_argument("mel_high_hz exceeds Nyquist");
    if (log_floor <= 0) throw std::invalid_argument("log_floor <= 0");
  }
};

// One utterance worth of spectral frames; column j is the mel_bands-dim
// frame at time j / frame_rate.
struct SpectralSequence {
  Eigen::MatrixXd frames;  // mel_bands x N
  int frame_rate = 100;

  int size() const { return static_cast<int>(frames.cols()); }
};

inline double mel_from_hz(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

inline double hz_from_mel(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// Triangular mel filterbank sampled at the FFT bin frequencies.
struct MelFilterbank {
  Eigen::MatrixXd weights;      // bands x (nfft/2 + 1)
  Eigen::VectorXd center_hz;    // peak frequency per band

  static MelFilterbank build(int bands, int nfft, int sample_rate,
                             double low_hz, double high_hz) {
    if (bands <= 0) throw std::invalid_argument("bands <= 0");
    const int bins = nfft / 2 + 1;
    const double mel_lo = mel_from_hz(low_hz);
    const double mel_hi = mel_from_hz(high_hz);

    // bands + 2 edge points, evenly spaced on the mel scale
    std::vector<double> edge(bands + 2);
    for (int i = 0; i < bands + 2; ++i)
      edge[i] = hz_from_mel(mel_lo + (mel_hi - mel_lo) * i / (bands + 1));

    MelFilterbank fb;
    fb.weights = Eigen::MatrixXd::Zero(bands, bins);
    fb.center_hz.resize(bands);
    for (int m = 0; m < bands; ++m) {
      const double fl = edge[m], fc = edge[m + 1], fr = edge[m + 2];
      fb.center_hz[m] = fc;
      for (int k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * sample_rate / nfft;
        if (f > fl && f < fc)
          fb.weights(m, k) = (f - fl) / (fc - fl);
        else if (f >= fc && f < fr)
          fb.weights(m, k) = (fr - f) / (fr - fc);
      }
    }
    return fb;
  }
};

// Linear-interpolation resampler; adequate for moving corpus audio to the
// analysis rate.
inline std::vector<double> resample_linear(std::span<const double> in,
                                           int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0)
    throw std::invalid_argument("resample rates must be positive");
  if (from_rate == to_rate) return std::vector<double>(in.begin(), in.end());
  if (in.empty()) return {};
  const std::size_t n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(in.size()) * to_rate / from_rate));
  std::vector<double> out(n_out);
  const double step = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double t = i * step;
    const auto i0 = static_cast<std::size_t>(t);
    if (i0 + 1 >= in.size()) {
      out[i] = in.back();
    } else {
      const double frac = t - static_cast<double>(i0);
      out[i] = in[i0] * (1.0 - frac) + in[i0 + 1] * frac;
    }
  }
  return out;
}

// Unnormalized MFSC extraction. Frames start every hop; the tail is
// zero-padded so a clip of exactly one second yields exactly frame_rate
// frames (N = ceil(len / hop)).
inline SpectralSequence extract_mfsc(const AudioClip& clip,
                                     const FrontendConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty())
    throw std::invalid_argument("extract_mfsc: empty clip");
  if (clip.sample_rate <= 0)
    throw std::invalid_argument("extract_mfsc: bad sample rate");
  for (double v : clip.samples)
    if (!std::isfinite(v))
      throw std::invalid_argument("extract_mfsc: non-finite sample");
  if (clip.sample_rate < 2.0 * cfg.high_hz())
    throw std::invalid_argument(
        "extract_mfsc: clip sample rate below twice the highest mel edge");

  std::vector<double> x =
      resample_linear(clip.samples, clip.sample_rate, cfg.analysis_rate);

  // pre-emphasis (first sample passes through unchanged)
  for (std::size_t i = x.size(); i > 1; --i)
    x[i - 1] -= cfg.preemphasis * x[i - 2];

  const int rate = cfg.analysis_rate;
  const int win = static_cast<int>(std::lround(rate * cfg.window_ms / 1000.0));
  const int hop = static_cast<int>(std::lround(rate * cfg.hop_ms / 1000.0));
  if (hop <= 0 || win <= 0)
    throw std::invalid_argument("extract_mfsc: degenerate frame geometry");
  if (win > cfg.fft_size)
    throw std::invalid_argument("extract_mfsc: window longer than fft_size");

  const auto len = static_cast<long long>(x.size());
  const int n_frames = static_cast<int>((len + hop - 1) / hop);
  if (n_frames <= 0) throw std::invalid_argument("extract_mfsc: no frames");

  Eigen::VectorXd hamming(win);
  for (int i = 0; i < win; ++i)
    hamming[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i /
                                        (win > 1 ? win - 1 : 1));

  MelFilterbank fb = MelFilterbank::build(cfg.mel_bands, cfg.fft_size, rate,
                                          cfg.mel_low_hz, cfg.high_hz());

  SpectralSequence seq;
  seq.frame_rate = static_cast<int>(std::lround(cfg.frame_rate()));
  seq.frames.resize(cfg.mel_bands, n_frames);

  std::vector<double> frame(win);
  Eigen::VectorXd power(cfg.fft_size / 2 + 1);
  for (int j = 0; j < n_frames; ++j) {
    const long long start = static_cast<long long>(j) * hop;
    for (int i = 0; i < win; ++i) {
      const long long s = start + i;
      frame[i] = (s < len ? x[static_cast<std::size_t>(s)] : 0.0) * hamming[i];
    }
    std::vector<double> p = power_spectrum(frame, cfg.fft_size);
    for (int k = 0; k < power.size(); ++k) power[k] = p[k];
    Eigen::VectorXd energies = fb.weights * power;
    for (int m = 0; m < cfg.mel_bands; ++m)
      seq.frames(m, j) = std::log(std::max(energies[m], cfg.log_floor));
  }
  return seq;
}

// Per-dimension z-score statistics over a training corpus. Uses the
// population standard deviation; dimensions with (near-)zero spread map
// to zero instead of blowing up.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
  static constexpr double kDegenerateStd = 1e-8;

  static Normalizer fit(std::span<const SpectralSequence> seqs) {
    long long total = 0;
    int dims = -1;
    for (const auto& s : seqs) {
      total += s.size();
      if (dims < 0) dims = static_cast<int>(s.frames.rows());
      else if (dims != s.frames.rows())
        throw std::invalid_argument("Normalizer::fit: mixed dimensions");
    }
    if (total < 2)
      throw std::invalid_argument("Normalizer::fit: need at least 2 frames");

    Normalizer nz;
    nz.mean = Eigen::VectorXd::Zero(dims);
    for (const auto& s : seqs) nz.mean += s.frames.rowwise().sum();
    nz.mean /= static_cast<double>(total);

    Eigen::VectorXd var = Eigen::VectorXd::Zero(dims);
    for (const auto& s : seqs)
      var += (s.frames.colwise() - nz.mean).array().square().matrix()
                 .rowwise().sum();
    var /= static_cast<double>(total);
    nz.stddev = var.array().sqrt();
    return nz;
  }

  SpectralSequence apply(const SpectralSequence& s) const {
    check_dims(s);
    SpectralSequence out = s;
    for (int d = 0; d < mean.size(); ++d) {
      if (stddev[d] < kDegenerateStd)
        out.frames.row(d).setZero();
      else
        out.frames.row(d) =
            (s.frames.row(d).array() - mean[d]) / stddev[d];
    }
    return out;
  }

  SpectralSequence invert(const SpectralSequence& s) const {
    check_dims(s);
    SpectralSequence out = s;
    for (int d = 0; d < mean.size(); ++d) {
      if (stddev[d] < kDegenerateStd)
        out.frames.row(d).setConstant(mean[d]);
      else
        out.frames.row(d) = s.frames.row(d).array() * stddev[d] + mean[d];
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["mean"] = std::vector<double>(mean.begin(), mean.end());
    j["std"] = std::vector<double>(stddev.begin(), stddev.end());
    return j;
  }

  static Normalizer from_json(const nlohmann::json& j) {
    Normalizer nz;
    auto m = j.at("mean").get<std::vector<double>>();
    auto s = j.at("std").get<std::vector<double>>();
    if (m.size() != s.size())
      throw std::runtime_error("normalizer: mean/std size mismatch");
    nz.mean = Eigen::Map<Eigen::VectorXd>(m.data(), m.size());
    nz.stddev = Eigen::Map<Eigen::VectorXd>(s.data(), s.size());
    return nz;
  }

 private:
  void check_dims(const SpectralSequence& s) const {
    if (s.frames.rows() != mean.size())
      throw std::invalid_argument("normalizer dimension mismatch");
  }
};

// The spectral image centered at frame j: columns j-d .. j+d with replicate
// padding at the sequence edges.
inline Eigen::MatrixXd spectral_window(const SpectralSequence& seq, int center,
                                       int width) {
  if (width <= 0 || width % 2 == 0)
    throw std::invalid_argument("spectral_window: width must be odd");
  const int n = seq.size();
  if (center < 0 || center >= n)
    throw std::out_of_range("spectral_window: center out of range");
  const int half = width / 2;
  Eigen::MatrixXd img(seq.frames.rows(), width);
  for (int k = 0; k < width; ++k) {
    int j = std::clamp(center - half + k, 0, n - 1);
    img.col(k) = seq.frames.col(j);
  }
  return img;
}

}  // namespace emoanim

#endif  // EMOANIM_MFSC_HPP_
