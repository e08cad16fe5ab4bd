// emoanim/svg.hpp

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

// Minimal landmark rendering: jaw and nose as open polylines, outer and
// inner lips as closed polygons, one SVG file per animation frame.

#ifndef EMOANIM_SVG_HPP_
#define EMOANIM_SVG_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <string>

#include "emoanim/io_util.hpp"
#include "emoanim/shape_model.hpp"

namespace emoanim {

struct SvgStyle {
  double margin_frac = 0.15;  // padding around the shape bounding box
  double stroke_width = 2.0;
  std::string stroke = "#222222";
  std::string background = "#ffffff";
};

namespace detail {

inline void append_poly(std::string& out, const ShapeVector& s, int first,
                        int last, bool closed, const SvgStyle& st) {
  out += closed ? "  <polygon points=\"" : "  <polyline points=\"";
  for (int i = first; i <= last; ++i) {
    if (i != first) out += ' ';
    out += format_double(s[i]) + ',' + format_double(s[kNumLandmarks + i]);
  }
  out += "\" fill=\"none\" stroke=\"" + st.stroke + "\" stroke-width=\"" +
         format_double(st.stroke_width) +
         "\" stroke-linejoin=\"round\" stroke-linecap=\"round\"/>\n";
}

}  // namespace detail

// One frame as a standalone SVG document. The viewBox is chosen by the
// caller (usually from the whole track) so consecutive frames do not jitter.
inline std::string render_shape_svg(const ShapeVector& shape, double min_x,
                                    double min_y, double width, double height,
                                    const SvgStyle& style = {}) {
  check_shape(shape, "render_shape_svg");
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" +
         format_double(min_x) + ' ' + format_double(min_y) + ' ' +
         format_double(width) + ' ' + format_double(height) + "\">\n";
  out += "  <rect x=\"" + format_double(min_x) + "\" y=\"" +
         format_double(min_y) + "\" width=\"" + format_double(width) +
         "\" height=\"" + format_double(height) + "\" fill=\"" +
         style.background + "\"/>\n";
  detail::append_poly(out, shape, 0, 11, /*closed=*/false, style);   // jaw
  detail::append_poly(out, shape, 12, 15, /*closed=*/false, style);  // nose
  detail::append_poly(out, shape, 16, 27, /*closed=*/true, style);   // outer lip
  detail::append_poly(out, shape, 28, 35, /*closed=*/true, style);   // inner lip
  out += "</svg>\n";
  return out;
}

// Renders every column of a 72 x N landmark track as frame_NNNNN.svg.
inline void write_svg_frames(const std::filesystem::path& dir,
                             const Eigen::MatrixXd& track,
                             const SvgStyle& style = {}) {
  if (track.rows() != kShapeDim)
    throw std::invalid_argument("write_svg_frames: need 72 rows");
  if (track.cols() == 0)
    throw std::invalid_argument("write_svg_frames: empty track");
  std::filesystem::create_directories(dir);

  const double min_x = track.topRows(kNumLandmarks).minCoeff();
  const double max_x = track.topRows(kNumLandmarks).maxCoeff();
  const double min_y = track.bottomRows(kNumLandmarks).minCoeff();
  const double max_y = track.bottomRows(kNumLandmarks).maxCoeff();
  const double pad =
      style.margin_frac * std::max(max_x - min_x, max_y - min_y) + 1e-6;

  for (int j = 0; j < track.cols(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.svg", j);
    write_text_file(dir / name,
                    render_shape_svg(track.col(j), min_x - pad, min_y - pad,
                                     max_x - min_x + 2 * pad,
                                     max_y - min_y + 2 * pad, style));
  }
}

}  // namespace emoanim

#endif  // EMOANIM_SVG_HPP_
