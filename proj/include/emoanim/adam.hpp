// emoanim/adam.hpp

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

#ifndef EMOANIM_ADAM_HPP_
#define EMOANIM_ADAM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace emoanim {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam (Kingma & Ba 2015). One optimizer instance owns the
// moment state for a fixed set of parameter blocks.
class Adam {
 public:
  Adam(std::vector<std::span<double>> params, AdamConfig cfg = {})
      : params_(std::move(params)), cfg_(cfg) {
    std::size_t total = 0;
    for (auto p : params_) total += p.size();
    m_.assign(total, 0.0);
    v_.assign(total, 0.0);
  }

  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return t_; }

  void step(const std::vector<std::span<double>>& grads) {
    if (grads.size() != params_.size())
      throw std::invalid_argument("adam: block count mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    std::size_t off = 0;
    for (std::size_t b = 0; b < params_.size(); ++b) {
      auto p = params_[b];
      auto g = grads[b];
      if (g.size() != p.size())
        throw std::invalid_argument("adam: block size mismatch");
      for (std::size_t i = 0; i < p.size(); ++i) {
        double& m = m_[off + i];
        double& v = v_[off + i];
        m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g[i];
        v = cfg_.beta2 * v + (1.0 - cfg_.beta2) * g[i] * g[i];
        const double mhat = m / c1;
        const double vhat = v / c2;
        p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      }
      off += p.size();
    }
  }

 private:
  std::vector<std::span<double>> params_;
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  long t_ = 0;
};

}  // namespace emoanim

#endif  // EMOANIM_ADAM_HPP_
