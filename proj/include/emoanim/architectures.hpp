// emoanim/architectures.hpp

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

// Canonical layer stacks for the two networks. DERN is a 3-conv classifier
// over 2-D spectral patches; DSRN is a 4-conv regressor whose convolutions
// and pools act on the frequency axis only. width_scale shrinks the hidden
// widths (for quick benchmarks) without touching the in/out dimensions.

#ifndef EMOANIM_ARCHITECTURES_HPP_
#define EMOANIM_ARCHITECTURES_HPP_

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "emoanim/layers.hpp"

namespace emoanim {

inline constexpr int kNumEmotions = 7;
inline constexpr double kDropoutRate = 0.5;

inline int scaled_depth(int depth, double width_scale) {
  if (width_scale <= 0.0)
    throw std::invalid_argument("width_scale must be positive");
  return std::max(1, static_cast<int>(std::lround(depth * width_scale)));
}

// conv(5x5,32) pool(3x3,/2) conv(5x5,64) pool conv(5x5,128) pool
// fc 256, dropout, fc n_classes, softmax
inline std::vector<LayerConfig> dern_layers(int n_classes = kNumEmotions,
                                            double width_scale = 1.0) {
  if (n_classes <= 1) throw std::invalid_argument("dern: need >= 2 classes");
  auto d = [&](int depth) { return scaled_depth(depth, width_scale); };
  std::vector<LayerConfig> out;
  out.push_back(LayerConfig::conv(d(32), 5, 5));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(3, 3, 2, 2));
  out.push_back(LayerConfig::conv(d(64), 5, 5));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(3, 3, 2, 2));
  out.push_back(LayerConfig::conv(d(128), 5, 5));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(3, 3, 2, 2));
  out.push_back(LayerConfig::flatten());
  out.push_back(LayerConfig::fc(d(256)));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::dropout(kDropoutRate));
  out.push_back(LayerConfig::fc(n_classes));
  out.push_back(LayerConfig::softmax());
  return out;
}

// conv(5x1,32) pool(3x1,2x1) conv(5x1,64) pool(3x1,2x1) conv(5x1,128)
// pool(2x1,2x1) conv(3x1,128) pool(2x1,2x1) fc 1024, dropout, fc 500,
// dropout, fc out_dim (linear regression head)
inline std::vector<LayerConfig> dsrn_layers(int out_dim,
                                            double width_scale = 1.0) {
  if (out_dim <= 0) throw std::invalid_argument("dsrn: bad output dim");
  auto d = [&](int depth) { return scaled_depth(depth, width_scale); };
  std::vector<LayerConfig> out;
  out.push_back(LayerConfig::conv(d(32), 5, 1));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(3, 1, 2, 1));
  out.push_back(LayerConfig::conv(d(64), 5, 1));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(3, 1, 2, 1));
  out.push_back(LayerConfig::conv(d(128), 5, 1));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(2, 1, 2, 1));
  out.push_back(LayerConfig::conv(d(128), 3, 1));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::maxpool(2, 1, 2, 1));
  out.push_back(LayerConfig::flatten());
  out.push_back(LayerConfig::fc(d(1024)));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::dropout(kDropoutRate));
  out.push_back(LayerConfig::fc(d(500)));
  out.push_back(LayerConfig::relu());
  out.push_back(LayerConfig::dropout(kDropoutRate));
  out.push_back(LayerConfig::fc(out_dim));
  return out;
}

// The DSRN constraint: no filter taps and no pooling strides along time.
inline bool is_frequency_only(const std::vector<LayerConfig>& configs) {
  for (const LayerConfig& c : configs) {
    if (c.kind == LayerKind::conv && c.filter_w != 1) return false;
    if (c.kind == LayerKind::maxpool && (c.filter_w != 1 || c.stride_w != 1))
      return false;
  }
  return true;
}

}  // namespace emoanim

#endif  // EMOANIM_ARCHITECTURES_HPP_
