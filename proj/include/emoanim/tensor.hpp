// emoanim/tensor.hpp

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

#ifndef EMOANIM_TENSOR_HPP_
#define EMOANIM_TENSOR_HPP_

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace emoanim {

struct Shape3 {
  int h = 0, w = 0, c = 0;  // height (frequency), width (time), channels

  int count() const { return h * w * c; }
  bool operator==(const Shape3&) const = default;
  std::string str() const {
    return std::to_string(h) + "x" + std::to_string(w) + "x" +
           std::to_string(c);
  }
};

// Dense rank-3 tensor, channel-fastest layout: index(y, x, ch) =
// (y * w + x) * c + ch. A conv output written as an (channels x positions)
// column-major matrix maps straight onto this layout.
struct Tensor {
  Shape3 shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape3 s) : shape(s), data(static_cast<std::size_t>(s.count()), 0.0) {}

  static Tensor zeros(int h, int w, int c) { return Tensor(Shape3{h, w, c}); }

  static Tensor from_matrix(const Eigen::MatrixXd& m) {
    Tensor t(Shape3{static_cast<int>(m.rows()), static_cast<int>(m.cols()), 1});
    for (int y = 0; y < m.rows(); ++y)
      for (int x = 0; x < m.cols(); ++x) t.at(y, x, 0) = m(y, x);
    return t;
  }

  static Tensor from_vector(const Eigen::VectorXd& v) {
    Tensor t(Shape3{static_cast<int>(v.size()), 1, 1});
    for (int i = 0; i < v.size(); ++i) t.data[static_cast<std::size_t>(i)] = v[i];
    return t;
  }

  double& at(int y, int x, int ch) {
    return data[(static_cast<std::size_t>(y) * shape.w + x) * shape.c + ch];
  }
  const double& at(int y, int x, int ch) const {
    return data[(static_cast<std::size_t>(y) * shape.w + x) * shape.c + ch];
  }

  std::size_t size() const { return data.size(); }

  Eigen::Map<Eigen::VectorXd> as_vector() {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }
  Eigen::Map<const Eigen::VectorXd> as_vector() const {
    return {data.data(), static_cast<Eigen::Index>(data.size())};
  }

  Eigen::VectorXd to_eigen() const { return as_vector(); }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }
};

}  // namespace emoanim

#endif  // EMOANIM_TENSOR_HPP_
