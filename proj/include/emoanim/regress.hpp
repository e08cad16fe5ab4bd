// emoanim/regress.hpp

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

// Emotion-conditioned shape regression: the per-emotion DSRN bank, top-two
// fusion of window estimates, and the overlap average that turns windowed
// estimates into one parameter vector per frame. Fusion and averaging both
// happen in PCA parameter space.

#ifndef EMOANIM_REGRESS_HPP_
#define EMOANIM_REGRESS_HPP_

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoanim/emotion.hpp"
#include "emoanim/mfsc.hpp"
#include "emoanim/network.hpp"
#include "emoanim/shape_model.hpp"
#include "emoanim/tensor.hpp"

namespace emoanim {

// The seven per-emotion regressors. Entries may be absent (e.g. a bank
// restricted to the emotions present in a small corpus); asking for a
// missing one is an error.
struct DsrnBank {
  std::array<std::optional<Network>, kNumEmotions> models;
  int kv = 5;
  int param_dim = 18;  // PCA dimension per frame

  int window_dim() const { return param_dim * kv; }

  Network& model(int emotion) {
    if (emotion < 0 || emotion >= kNumEmotions)
      throw std::out_of_range("bank: emotion index " + std::to_string(emotion));
    auto& m = models[static_cast<std::size_t>(emotion)];
    if (!m)
      throw std::runtime_error(std::string("bank: no model for emotion '") +
                               emotion_name(emotion) + "'");
    return *m;
  }

  void validate() const {
    for (int e = 0; e < kNumEmotions; ++e) {
      const auto& m = models[static_cast<std::size_t>(e)];
      if (!m) continue;
      const Shape3 out = m->output_shape();
      if (out.count() != window_dim())
        throw std::logic_error(std::string("bank: model '") + emotion_name(e) +
                               "' outputs " + std::to_string(out.count()) +
                               " values, expected " +
                               std::to_string(window_dim()));
    }
  }
};

// Top-two fusion: F~ = p* DSRN_{e*}(img) + p** DSRN_{e**}(img), blending the
// two most likely emotions' regressors by their normalized decision weights.
// When the runner-up weight is exactly zero only the winner is evaluated.
inline Eigen::VectorXd fuse_estimate(DsrnBank& bank, const Tensor& image,
                                     const UtteranceDecision& d) {
  if (std::abs(d.p_star + d.p_star2 - 1.0) > 1e-9)
    throw std::invalid_argument("fuse_estimate: weights must sum to 1");
  const Tensor& a = bank.model(d.e_star).forward(image, /*train=*/false);
  Eigen::VectorXd out =
      d.p_star * Eigen::Map<const Eigen::VectorXd>(
                     a.data.data(), static_cast<Eigen::Index>(a.size()));
  if (d.p_star2 != 0.0) {
    const Tensor& b = bank.model(d.e_star2).forward(image, /*train=*/false);
    out += d.p_star2 * Eigen::Map<const Eigen::VectorXd>(
                           b.data.data(), static_cast<Eigen::Index>(b.size()));
  }
  return out;
}

// One window estimate per frame (column j = estimate centered at frame j,
// laid out as kv blocks of `dim`, block b covering frame j + b - kv/2).
// Output column j = mean of every block that covers frame j; at the sequence
// edges fewer than kv windows exist and the mean is over the available ones.
inline Eigen::MatrixXd overlap_average(const Eigen::MatrixXd& estimates,
                                       int dim, int kv) {
  const int n = static_cast<int>(estimates.cols());
  if (n == 0) throw std::invalid_argument("overlap_average: no estimates");
  if (kv <= 0 || kv % 2 == 0)
    throw std::invalid_argument("overlap_average: kv must be odd");
  if (estimates.rows() != static_cast<Eigen::Index>(dim) * kv)
    throw std::invalid_argument("overlap_average: estimate rows != dim*kv");
  const int half = kv / 2;
  Eigen::MatrixXd track = Eigen::MatrixXd::Zero(dim, n);
  for (int j = 0; j < n; ++j) {
    int count = 0;
    for (int b = 0; b < kv; ++b) {
      const int center = j - (b - half);  // window whose block b is frame j
      if (center < 0 || center >= n) continue;
      track.col(j) += estimates.col(center).segment(
          static_cast<Eigen::Index>(b) * dim, dim);
      ++count;
    }
    track.col(j) /= static_cast<double>(count);
  }
  return track;
}

struct AnimationResult {
  Eigen::MatrixXd params;     // param_dim x N, at the acoustic frame rate
  Eigen::MatrixXd landmarks;  // 72 x N (packed shapes)
  UtteranceDecision decision;
};

// The full regression path of one utterance: per-frame spectral windows run
// through the fused bank, overlap-averaged, then lifted back to landmark
// space through the PCA model.
inline AnimationResult animate(DsrnBank& bank, const ShapeModel& shape_model,
                               const SpectralSequence& seq, int ka,
                               const UtteranceDecision& decision) {
  const int n = seq.size();
  if (n == 0) throw std::invalid_argument("animate: empty sequence");
  bank.validate();
  if (bank.param_dim != shape_model.pca.dim())
    throw std::logic_error("animate: bank/pca dimension mismatch");

  Eigen::MatrixXd estimates(bank.window_dim(), n);
  for (int j = 0; j < n; ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, ka));
    estimates.col(j) = fuse_estimate(bank, img, decision);
  }
  AnimationResult res;
  res.params = overlap_average(estimates, bank.param_dim, bank.kv);
  res.landmarks.resize(kShapeDim, n);
  for (int j = 0; j < n; ++j)
    res.landmarks.col(j) = shape_model.pca.reconstruct(res.params.col(j));
  res.decision = decision;
  return res;
}

}  // namespace emoanim

#endif  // EMOANIM_REGRESS_HPP_
