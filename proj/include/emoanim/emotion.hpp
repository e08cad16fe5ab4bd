// emoanim/emotion.hpp

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

// Utterance-level emotion decision: per-frame class votes are pooled into a
// histogram, the top two classes are kept, and the runner-up is dropped
// entirely when the winner holds more than 65% of the frames.

#ifndef EMOANIM_EMOTION_HPP_
#define EMOANIM_EMOTION_HPP_

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "emoanim/architectures.hpp"  // kNumEmotions

namespace emoanim {

// Fixed alphabetical ordering; indices are stable across the whole system.
inline constexpr std::array<const char*, kNumEmotions> kEmotionNames = {
    "anger", "disgust", "fear", "happiness", "neutral", "sadness", "surprise"};

inline const char* emotion_name(int index) {
  if (index < 0 || index >= kNumEmotions)
    throw std::out_of_range("emotion index " + std::to_string(index));
  return kEmotionNames[static_cast<std::size_t>(index)];
}

inline int emotion_index(const std::string& name) {
  for (int i = 0; i < kNumEmotions; ++i)
    if (name == kEmotionNames[static_cast<std::size_t>(i)]) return i;
  throw std::invalid_argument("unknown emotion '" + name + "'");
}

inline constexpr double kDominanceThreshold = 0.65;

struct UtteranceDecision {
  int e_star = 0;       // i*
  int e_star2 = 0;      // i**
  double p_star = 1.0;  // p*
  double p_star2 = 0.0; // p**
  std::array<double, kNumEmotions> histogram{};
};

// p_i = (1/T) * #{ j : label_j = i }
inline std::array<double, kNumEmotions> utterance_histogram(
    std::span<const int> frame_labels) {
  if (frame_labels.empty())
    throw std::invalid_argument("utterance_histogram: no frame predictions");
  std::array<double, kNumEmotions> p{};
  for (int l : frame_labels) {
    if (l < 0 || l >= kNumEmotions)
      throw std::out_of_range("frame label " + std::to_string(l));
    p[static_cast<std::size_t>(l)] += 1.0;
  }
  for (double& v : p) v /= static_cast<double>(frame_labels.size());
  return p;
}

// Top-two pick with the dominance cutoff. Ties go to the lower index, both
// for the winner and the runner-up. The cutoff is strict: exactly 0.65 keeps
// the runner-up.
inline UtteranceDecision decide(const std::array<double, kNumEmotions>& p,
                                double threshold = kDominanceThreshold) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("decide: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("decide: histogram does not sum to 1");

  int istar = 0;
  for (int i = 1; i < kNumEmotions; ++i)
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(istar)])
      istar = i;
  int istar2 = istar == 0 ? 1 : 0;
  for (int i = 0; i < kNumEmotions; ++i) {
    if (i == istar) continue;
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(istar2)])
      istar2 = i;
  }

  double p1 = p[static_cast<std::size_t>(istar)];
  double p2 = p[static_cast<std::size_t>(istar2)];
  if (p1 > threshold) p2 = 0.0;

  UtteranceDecision d;
  d.e_star = istar;
  d.e_star2 = istar2;
  const double denom = p1 + p2;
  // denom can only vanish on an all-zero histogram, which the sum check
  // already rejects.
  d.p_star = p1 / denom;
  d.p_star2 = 1.0 - d.p_star;
  d.histogram = p;
  return d;
}

inline UtteranceDecision decide_from_frames(std::span<const int> frame_labels,
                                            double threshold = kDominanceThreshold) {
  return decide(utterance_histogram(frame_labels), threshold);
}

}  // namespace emoanim

#endif  // EMOANIM_EMOTION_HPP_
