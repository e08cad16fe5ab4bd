// emoanim/shape_model.hpp

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

// Statistical shape model over 36 lower-face landmarks: generalized
// Procrustes alignment, a PCA parameter space, and the temporal parameter
// windows that form the regression targets.

#ifndef EMOANIM_SHAPE_MODEL_HPP_
#define EMOANIM_SHAPE_MODEL_HPP_

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "emoanim/io_util.hpp"
#include "json.hpp"

namespace emoanim {

inline constexpr int kNumLandmarks = 36;
inline constexpr int kShapeDim = 2 * kNumLandmarks;  // x0..x35, y0..y35

// Shapes are 72-vectors, all x coordinates first, then all y coordinates.
using ShapeVector = Eigen::VectorXd;

inline void check_shape(const ShapeVector& s, const char* where) {
  if (s.size() != kShapeDim)
    throw std::invalid_argument(std::string(where) + ": shape must have " +
                                std::to_string(kShapeDim) + " entries");
  if (!s.allFinite())
    throw std::invalid_argument(std::string(where) + ": non-finite shape");
}

inline ShapeVector center_shape(const ShapeVector& s) {
  ShapeVector c = s;
  const double mx = s.head(kNumLandmarks).mean();
  const double my = s.tail(kNumLandmarks).mean();
  c.head(kNumLandmarks).array() -= mx;
  c.tail(kNumLandmarks).array() -= my;
  return c;
}

// Centers and scales to unit Frobenius norm. Throws on degenerate shapes
// (all landmarks coincident).
inline ShapeVector normalize_shape(const ShapeVector& s) {
  ShapeVector c = center_shape(s);
  const double norm = c.norm();
  if (norm < 1e-12)
    throw std::invalid_argument("normalize_shape: degenerate shape");
  return c / norm;
}

// Best rotation R (det +1, reflections disallowed) taking src onto dst, both
// centered: R = V U^T from the SVD of the 2x2 cross-covariance src dst^T.
inline Eigen::Matrix2d procrustes_rotation(const ShapeVector& src,
                                           const ShapeVector& dst) {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Eigen::Vector2d a(src[i], src[kNumLandmarks + i]);
    const Eigen::Vector2d b(dst[i], dst[kNumLandmarks + i]);
    m += a * b.transpose();
  }
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(
      m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix2d u = svd.matrixU(), v = svd.matrixV();
  Eigen::Matrix2d r = v * u.transpose();
  if (r.determinant() < 0) {
    v.col(1) *= -1.0;
    r = v * u.transpose();
  }
  return r;
}

inline ShapeVector rotate_shape(const ShapeVector& s, const Eigen::Matrix2d& r) {
  ShapeVector out(kShapeDim);
  for (int i = 0; i < kNumLandmarks; ++i) {
    const Eigen::Vector2d p = r * Eigen::Vector2d(s[i], s[kNumLandmarks + i]);
    out[i] = p.x();
    out[kNumLandmarks + i] = p.y();
  }
  return out;
}

// Rotation that puts a centered shape into a canonical orientation: the
// principal axis goes to the x axis and the third-moment sign rule resolves
// the remaining 180-degree ambiguity. Aligning the reference this way makes
// the whole GPA output independent of any global similarity transform
// applied to the input set.
inline Eigen::Matrix2d canonical_rotation(const ShapeVector& s) {
  double mxx = 0, myy = 0, mxy = 0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    const double x = s[i], y = s[kNumLandmarks + i];
    mxx += x * x;
    myy += y * y;
    mxy += x * y;
  }
  const double theta = 0.5 * std::atan2(2.0 * mxy, mxx - myy);
  Eigen::Matrix2d r;
  r << std::cos(-theta), -std::sin(-theta), std::sin(-theta), std::cos(-theta);

  ShapeVector t = rotate_shape(s, r);
  double sx = 0, sy = 0;
  for (int i = 0; i < kNumLandmarks; ++i) {
    sx += t[i] * t[i] * t[i];
    const double y = t[kNumLandmarks + i];
    sy += y * y * y;
  }
  const double pick = std::abs(sx) > 1e-12 ? sx : sy;
  if (pick < 0) r = -r;  // rotate by pi
  return r;
}

struct GpaOptions {
  double tol = 1e-10;  // stop when the mean moves less than this
  int max_iter = 100;
  bool canonicalize = true;
};

struct GpaResult {
  ShapeVector reference;               // unit norm, zero centroid
  std::vector<ShapeVector> aligned;    // same order as the input
  int iterations = 0;
  double final_shift = 0.0;
};

// Generalized Procrustes alignment: center and unit-scale every shape once,
// then alternate rotating each shape onto the current mean and re-estimating
// the mean until it stops moving.
inline GpaResult gpa_align(const std::vector<ShapeVector>& shapes,
                           const GpaOptions& opt = {}) {
  if (shapes.empty()) throw std::invalid_argument("gpa_align: no shapes");
  std::vector<ShapeVector> base;
  base.reserve(shapes.size());
  for (const auto& s : shapes) {
    check_shape(s, "gpa_align");
    base.push_back(normalize_shape(s));
  }

  GpaResult res;
  res.reference = base[0];
  res.aligned = base;
  for (res.iterations = 1; res.iterations <= opt.max_iter; ++res.iterations) {
    for (std::size_t i = 0; i < base.size(); ++i) {
      const Eigen::Matrix2d r = procrustes_rotation(base[i], res.reference);
      res.aligned[i] = rotate_shape(base[i], r);
    }
    ShapeVector mean = ShapeVector::Zero(kShapeDim);
    for (const auto& a : res.aligned) mean += a;
    mean /= static_cast<double>(res.aligned.size());
    mean = normalize_shape(mean);
    res.final_shift = (mean - res.reference).norm();
    res.reference = mean;
    if (res.final_shift < opt.tol) break;
  }
  res.iterations = std::min(res.iterations, opt.max_iter);

  if (opt.canonicalize) {
    const Eigen::Matrix2d c = canonical_rotation(res.reference);
    res.reference = rotate_shape(res.reference, c);
    for (auto& a : res.aligned) a = rotate_shape(a, c);
  }
  return res;
}

// Single-shape alignment into an existing reference frame (for shapes that
// did not participate in the GPA fit).
inline ShapeVector align_to_reference(const ShapeVector& shape,
                                      const ShapeVector& reference) {
  check_shape(shape, "align_to_reference");
  ShapeVector n = normalize_shape(shape);
  return rotate_shape(n, procrustes_rotation(n, reference));
}

// ---------------------------------------------------------------------------
// PCA over aligned shape vectors.

struct ShapePca {
  Eigen::VectorXd mean;          // 72
  Eigen::MatrixXd basis;         // 72 x D, orthonormal columns
  Eigen::VectorXd eigenvalues;   // D, non-increasing
  double variance_covered = 0.0;

  int dim() const { return static_cast<int>(basis.cols()); }

  Eigen::VectorXd project(const ShapeVector& s) const {
    check_shape(s, "ShapePca::project");
    return basis.transpose() * (s - mean);
  }

  ShapeVector reconstruct(const Eigen::VectorXd& params) const {
    if (params.size() != dim())
      throw std::invalid_argument("ShapePca::reconstruct: parameter size " +
                                  std::to_string(params.size()) +
                                  ", model has " + std::to_string(dim()));
    return mean + basis * params;
  }
};

namespace detail {

inline ShapePca pca_from_eigen(const std::vector<ShapeVector>& shapes, int keep,
                               double variance_target) {
  const auto n = static_cast<int>(shapes.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(kShapeDim);
  for (const auto& s : shapes) mean += s;
  mean /= n;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(kShapeDim, kShapeDim);
  for (const auto& s : shapes) {
    const Eigen::VectorXd d = s - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= std::max(1, n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("fit_pca: eigendecomposition failed");

  // ascending from Eigen; flip to descending and clamp round-off negatives
  Eigen::VectorXd all_vals(kShapeDim);
  Eigen::MatrixXd all_vecs(kShapeDim, kShapeDim);
  for (int i = 0; i < kShapeDim; ++i) {
    all_vals[i] = std::max(0.0, es.eigenvalues()[kShapeDim - 1 - i]);
    all_vecs.col(i) = es.eigenvectors().col(kShapeDim - 1 - i);
  }
  const double total = all_vals.sum();

  if (keep <= 0) {  // choose the smallest D reaching the variance target
    double acc = 0.0;
    keep = kShapeDim;
    for (int i = 0; i < kShapeDim; ++i) {
      acc += all_vals[i];
      if (total > 0 && acc / total >= variance_target) {
        keep = i + 1;
        break;
      }
    }
  }
  if (n < keep + 1)
    throw std::invalid_argument("fit_pca: need at least D+1 = " +
                                std::to_string(keep + 1) + " shapes, got " +
                                std::to_string(n));

  ShapePca pca;
  pca.mean = mean;
  pca.eigenvalues = all_vals.head(keep);
  pca.basis = all_vecs.leftCols(keep);
  // stable sign convention: largest-|entry| component of each axis positive
  for (int c = 0; c < keep; ++c) {
    int idx = 0;
    pca.basis.col(c).cwiseAbs().maxCoeff(&idx);
    if (pca.basis(idx, c) < 0) pca.basis.col(c) *= -1.0;
  }
  pca.variance_covered =
      total > 0 ? pca.eigenvalues.sum() / total : 1.0;
  return pca;
}

}  // namespace detail

// Fixed-dimension fit (the default operating point is 18 parameters).
inline ShapePca fit_pca(const std::vector<ShapeVector>& shapes, int dim = 18) {
  if (dim <= 0 || dim > kShapeDim)
    throw std::invalid_argument("fit_pca: dim out of range");
  if (static_cast<int>(shapes.size()) < dim + 1)
    throw std::invalid_argument("fit_pca: need at least D+1 = " +
                                std::to_string(dim + 1) + " shapes, got " +
                                std::to_string(shapes.size()));
  for (const auto& s : shapes) check_shape(s, "fit_pca");
  return detail::pca_from_eigen(shapes, dim, 0.0);
}

// Variance-target fit: smallest D whose retained fraction reaches target.
inline ShapePca fit_pca_variance(const std::vector<ShapeVector>& shapes,
                                 double target) {
  if (target <= 0.0 || target > 1.0)
    throw std::invalid_argument("fit_pca_variance: target must be in (0,1]");
  if (shapes.size() < 2)
    throw std::invalid_argument("fit_pca_variance: need at least 2 shapes");
  for (const auto& s : shapes) check_shape(s, "fit_pca_variance");
  return detail::pca_from_eigen(shapes, 0, target);
}

// ---------------------------------------------------------------------------
// Full shape model: alignment reference + PCA space.

struct ShapeModel {
  ShapeVector reference;
  ShapePca pca;

  Eigen::VectorXd params_of(const ShapeVector& raw_shape) const {
    return pca.project(align_to_reference(raw_shape, reference));
  }

  ShapeVector shape_of(const Eigen::VectorXd& params) const {
    return pca.reconstruct(params);
  }

  // raw 72 x N landmark track -> D x N parameter track
  Eigen::MatrixXd params_track(const Eigen::MatrixXd& track) const {
    if (track.rows() != kShapeDim)
      throw std::invalid_argument("params_track: track must have 72 rows");
    Eigen::MatrixXd out(pca.dim(), track.cols());
    for (int j = 0; j < track.cols(); ++j)
      out.col(j) = params_of(track.col(j));
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["reference"] = std::vector<double>(reference.begin(), reference.end());
    j["mean"] = std::vector<double>(pca.mean.begin(), pca.mean.end());
    std::vector<double> b;  // row-major
    b.reserve(static_cast<std::size_t>(pca.basis.size()));
    for (int r = 0; r < pca.basis.rows(); ++r)
      for (int c = 0; c < pca.basis.cols(); ++c) b.push_back(pca.basis(r, c));
    j["basis"] = b;
    j["eigenvalues"] =
        std::vector<double>(pca.eigenvalues.begin(), pca.eigenvalues.end());
    j["dim"] = pca.dim();
    j["variance_covered"] = pca.variance_covered;
    return j;
  }

  static ShapeModel from_json(const nlohmann::json& j) {
    ShapeModel m;
    auto ref = j.at("reference").get<std::vector<double>>();
    auto mean = j.at("mean").get<std::vector<double>>();
    auto basis = j.at("basis").get<std::vector<double>>();
    auto ev = j.at("eigenvalues").get<std::vector<double>>();
    const int dim = j.at("dim").get<int>();
    if (ref.size() != kShapeDim || mean.size() != kShapeDim ||
        basis.size() != static_cast<std::size_t>(kShapeDim) * dim ||
        ev.size() != static_cast<std::size_t>(dim))
      throw std::runtime_error("shape model file: inconsistent sizes");
    m.reference = Eigen::Map<Eigen::VectorXd>(ref.data(), kShapeDim);
    m.pca.mean = Eigen::Map<Eigen::VectorXd>(mean.data(), kShapeDim);
    m.pca.basis.resize(kShapeDim, dim);
    for (int r = 0; r < kShapeDim; ++r)
      for (int c = 0; c < dim; ++c)
        m.pca.basis(r, c) = basis[static_cast<std::size_t>(r) * dim + c];
    m.pca.eigenvalues = Eigen::Map<Eigen::VectorXd>(ev.data(), dim);
    m.pca.variance_covered = j.at("variance_covered").get<double>();
    return m;
  }

  void save(const std::filesystem::path& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
  }

  static ShapeModel load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }
};

// ---------------------------------------------------------------------------
// Temporal parameter windows (regression targets).

// Concatenation [f_{j-d} .. f_j .. f_{j+d}] of track columns with replicate
// padding at the edges; length rows * width.
inline Eigen::VectorXd shape_window(const Eigen::MatrixXd& track, int center,
                                    int width) {
  if (width <= 0 || width % 2 == 0)
    throw std::invalid_argument("shape_window: width must be odd");
  const int n = static_cast<int>(track.cols());
  if (center < 0 || center >= n)
    throw std::out_of_range("shape_window: center out of range");
  const int d = static_cast<int>(track.rows());
  const int half = width / 2;
  Eigen::VectorXd out(static_cast<Eigen::Index>(d) * width);
  for (int k = 0; k < width; ++k) {
    const int j = std::clamp(center - half + k, 0, n - 1);
    out.segment(static_cast<Eigen::Index>(k) * d, d) = track.col(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Landmark CSV files: one row per frame, "frame, x1, y1, ..., x36, y36".

inline Eigen::MatrixXd load_landmark_track(const std::filesystem::path& path) {
  auto rows = read_csv(path);
  // optional header row
  std::size_t first = 0;
  if (!rows.empty() && !rows[0].empty() && rows[0][0] == "frame") first = 1;
  if (rows.size() <= first)
    throw std::runtime_error(path.string() + ": empty landmark track");

  Eigen::MatrixXd track(kShapeDim, rows.size() - first);
  long long prev_index = -1;
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 1 + 2 * kNumLandmarks)
      throw std::runtime_error(path.string() + ": row " + std::to_string(r) +
                               " has " + std::to_string(row.size()) +
                               " fields, expected " +
                               std::to_string(1 + 2 * kNumLandmarks));
    const long long idx = parse_int(row[0], path.string());
    if (idx <= prev_index)
      throw std::runtime_error(path.string() +
                               ": frame indices must be increasing");
    prev_index = idx;
    const auto col = static_cast<Eigen::Index>(r - first);
    for (int i = 0; i < kNumLandmarks; ++i) {
      track(i, col) = parse_double(row[1 + 2 * i], path.string());
      track(kNumLandmarks + i, col) =
          parse_double(row[2 + 2 * i], path.string());
    }
  }
  return track;
}

inline void write_landmark_track(const std::filesystem::path& path,
                                 const Eigen::MatrixXd& track) {
  if (track.rows() != kShapeDim)
    throw std::invalid_argument("write_landmark_track: need 72 rows");
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "frame";
  for (int i = 1; i <= kNumLandmarks; ++i) os << ",x" << i << ",y" << i;
  os << "\n";
  for (int j = 0; j < track.cols(); ++j) {
    os << j;
    for (int i = 0; i < kNumLandmarks; ++i)
      os << "," << format_double(track(i, j)) << ","
         << format_double(track(kNumLandmarks + i, j));
    os << "\n";
  }
}

}  // namespace emoanim

#endif  // EMOANIM_SHAPE_MODEL_HPP_
