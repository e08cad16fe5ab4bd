// emoanim/track.hpp

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

#ifndef EMOANIM_TRACK_HPP_
#define EMOANIM_TRACK_HPP_

#include <Eigen/Dense>
#include <stdexcept>

namespace emoanim {

// Tracks are dim x frames matrices; column j is the sample at frame j.

// Catmull-Rom upsampling by an integer factor (25 Hz -> 100 Hz is factor 4).
// Every input sample is reproduced exactly at output index factor * i and the
// output has factor * (n - 1) + 1 columns. End tangents use one-sided
// differences, which keeps straight-line tracks exactly straight. Tracks
// shorter than 4 samples fall back to piecewise-linear interpolation.
inline Eigen::MatrixXd upsample_track(const Eigen::MatrixXd& knots,
                                      int factor = 4) {
  const int n = static_cast<int>(knots.cols());
  if (factor < 1) throw std::invalid_argument("upsample_track: factor < 1");
  if (n < 2) throw std::invalid_argument("upsample_track: need >= 2 frames");

  const int out_n = factor * (n - 1) + 1;
  Eigen::MatrixXd out(knots.rows(), out_n);

  if (n < 4) {
    for (int seg = 0; seg < n - 1; ++seg)
      for (int s = 0; s < factor; ++s) {
        const double t = static_cast<double>(s) / factor;
        out.col(seg * factor + s) =
            (1.0 - t) * knots.col(seg) + t * knots.col(seg + 1);
      }
    out.col(out_n - 1) = knots.col(n - 1);
    return out;
  }

  // per-knot tangents
  Eigen::MatrixXd tangent(knots.rows(), n);
  tangent.col(0) = knots.col(1) - knots.col(0);
  tangent.col(n - 1) = knots.col(n - 1) - knots.col(n - 2);
  for (int i = 1; i < n - 1; ++i)
    tangent.col(i) = 0.5 * (knots.col(i + 1) - knots.col(i - 1));

  for (int seg = 0; seg < n - 1; ++seg) {
    for (int s = 0; s < factor; ++s) {
      const double t = static_cast<double>(s) / factor;
      const double t2 = t * t, t3 = t2 * t;
      const double h00 = 2 * t3 - 3 * t2 + 1;
      const double h10 = t3 - 2 * t2 + t;
      const double h01 = -2 * t3 + 3 * t2;
      const double h11 = t3 - t2;
      out.col(seg * factor + s) = h00 * knots.col(seg) +
                                  h10 * tangent.col(seg) +
                                  h01 * knots.col(seg + 1) +
                                  h11 * tangent.col(seg + 1);
    }
  }
  out.col(out_n - 1) = knots.col(n - 1);
  return out;
}

// Keep every k-th column starting from 0 (100 Hz -> 25 Hz is stride 4).
inline Eigen::MatrixXd downsample_track(const Eigen::MatrixXd& track,
                                        int stride) {
  if (stride < 1) throw std::invalid_argument("downsample_track: stride < 1");
  const int n = static_cast<int>(track.cols());
  if (n == 0) return track;
  const int m = (n - 1) / stride + 1;
  Eigen::MatrixXd out(track.rows(), m);
  for (int i = 0; i < m; ++i) out.col(i) = track.col(i * stride);
  return out;
}

}  // namespace emoanim

#endif  // EMOANIM_TRACK_HPP_
