// emoanim/losses.hpp

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

#ifndef EMOANIM_LOSSES_HPP_
#define EMOANIM_LOSSES_HPP_

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace emoanim {

// Per-example MSE, averaged over output dimensions:
//   L = (1/D) * sum_d (p_d - t_d)^2      dL/dp_d = (2/D) (p_d - t_d)
inline double mse_loss(std::span<const double> pred,
                       std::span<const double> target,
                       std::span<double> grad) {
  if (pred.size() != target.size() || pred.size() != grad.size())
    throw std::invalid_argument("mse_loss: size mismatch");
  const double inv = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    const double e = pred[d] - target[d];
    loss += e * e;
    grad[d] = 2.0 * inv * e;
  }
  return loss * inv;
}

inline double mse_value(std::span<const double> pred,
                        std::span<const double> target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("mse_value: size mismatch");
  double loss = 0.0;
  for (std::size_t d = 0; d < pred.size(); ++d) {
    const double e = pred[d] - target[d];
    loss += e * e;
  }
  return loss / static_cast<double>(pred.size());
}

// Cross entropy against a hard label, applied to an already-softmaxed
// probability vector. Probabilities are clamped away from zero so the loss
// stays finite.
inline constexpr double kXentClamp = 1e-12;

inline double cross_entropy_loss(std::span<const double> probs, int label,
                                 std::span<double> grad) {
  if (probs.size() != grad.size())
    throw std::invalid_argument("cross_entropy_loss: size mismatch");
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw std::invalid_argument("cross_entropy_loss: label out of range");
  for (double& g : grad) g = 0.0;
  const double p = std::max(probs[static_cast<std::size_t>(label)], kXentClamp);
  grad[static_cast<std::size_t>(label)] = -1.0 / p;
  return -std::log(p);
}

inline double cross_entropy_value(std::span<const double> probs, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= probs.size())
    throw std::invalid_argument("cross_entropy_value: label out of range");
  return -std::log(
      std::max(probs[static_cast<std::size_t>(label)], kXentClamp));
}

}  // namespace emoanim

#endif  // EMOANIM_LOSSES_HPP_
