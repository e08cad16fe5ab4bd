// emoanim/layers.hpp

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

// The fixed layer set of the training engine. Convolutions are stride-1
// 2-D cross-correlations with zero "same" padding; max pooling uses
// "same"-style padding with ceil(in/stride) output dims and ignores padded
// cells. Everything runs in double precision.

#ifndef EMOANIM_LAYERS_HPP_
#define EMOANIM_LAYERS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoanim/rng.hpp"
#include "emoanim/tensor.hpp"

namespace emoanim {

enum class LayerKind { conv, maxpool, fc, relu, softmax, dropout, flatten };

inline const char* kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::fc: return "fc";
    case LayerKind::relu: return "relu";
    case LayerKind::softmax: return "softmax";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

inline LayerKind kind_from_name(const std::string& s) {
  for (LayerKind k : {LayerKind::conv, LayerKind::maxpool, LayerKind::fc,
                      LayerKind::relu, LayerKind::softmax, LayerKind::dropout,
                      LayerKind::flatten})
    if (s == kind_name(k)) return k;
  throw std::runtime_error("unknown layer kind '" + s + "'");
}

struct LayerConfig {
  LayerKind kind = LayerKind::relu;
  int depth = 0;                    // conv filters / fc units
  int filter_h = 1, filter_w = 1;   // conv / pool window
  int stride_h = 1, stride_w = 1;   // pool stride
  double dropout_rate = 0.0;

  static LayerConfig conv(int depth, int fh, int fw) {
    return {LayerKind::conv, depth, fh, fw, 1, 1, 0.0};
  }
  static LayerConfig maxpool(int fh, int fw, int sh, int sw) {
    return {LayerKind::maxpool, 0, fh, fw, sh, sw, 0.0};
  }
  static LayerConfig fc(int units) {
    return {LayerKind::fc, units, 1, 1, 1, 1, 0.0};
  }
  static LayerConfig relu() { return {LayerKind::relu}; }
  static LayerConfig softmax() { return {LayerKind::softmax}; }
  static LayerConfig dropout(double rate) {
    return {LayerKind::dropout, 0, 1, 1, 1, 1, rate};
  }
  static LayerConfig flatten() { return {LayerKind::flatten}; }

  void validate() const {
    switch (kind) {
      case LayerKind::conv:
        if (depth <= 0 || filter_h <= 0 || filter_w <= 0)
          throw std::invalid_argument("conv: bad depth or filter size");
        break;
      case LayerKind::maxpool:
        if (filter_h <= 0 || filter_w <= 0 || stride_h <= 0 || stride_w <= 0)
          throw std::invalid_argument("maxpool: bad window or stride");
        break;
      case LayerKind::fc:
        if (depth <= 0) throw std::invalid_argument("fc: bad unit count");
        break;
      case LayerKind::dropout:
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
          throw std::invalid_argument("dropout: rate must be in [0,1)");
        break;
      default:
        break;
    }
  }
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerConfig config() const = 0;
  Shape3 in_shape() const { return in_shape_; }
  Shape3 out_shape() const { return out_shape_; }

  // train=true caches whatever backward needs; rng is only consulted by
  // dropout.
  virtual const Tensor& forward(const Tensor& in, bool train, Rng* rng) = 0;
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::span<double> params() { return {}; }
  virtual std::span<double> grads() { return {}; }
  virtual void init_params(Rng&) {}

 protected:
  Shape3 in_shape_{}, out_shape_{};
  bool have_cache_ = false;

  void require_cache(const char* who) const {
    if (!have_cache_)
      throw std::logic_error(std::string(who) +
                             ": backward without a training-mode forward");
  }
  void check_in(const Tensor& t, const char* who) const {
    if (!(t.shape == in_shape_))
      throw std::invalid_argument(std::string(who) + ": input shape " +
                                  t.shape.str() + ", expected " +
                                  in_shape_.str());
  }
};

// ---------------------------------------------------------------------------

class ConvLayer final : public Layer {
 public:
  ConvLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    cfg_.validate();
    in_shape_ = in;
    out_shape_ = {in.h, in.w, cfg.depth};
    k_ = cfg.filter_h * cfg.filter_w * in.c;
    weights_.assign(static_cast<std::size_t>(cfg.depth) * k_ + cfg.depth, 0.0);
    grads_.assign(weights_.size(), 0.0);
    pad_h_ = (cfg.filter_h - 1) / 2;
    pad_w_ = (cfg.filter_w - 1) / 2;
  }

  LayerConfig config() const override { return cfg_; }
  std::span<double> params() override { return weights_; }
  std::span<double> grads() override { return grads_; }

  void init_params(Rng& rng) override {
    const double limit = std::sqrt(6.0 / k_);  // He-uniform for ReLU stacks
    for (int i = 0; i < cfg_.depth * k_; ++i)
      weights_[static_cast<std::size_t>(i)] = rng.uniform(-limit, limit);
    // biases stay zero
  }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "conv");
    build_col(in);
    const int p = in_shape_.h * in_shape_.w;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        wmat(weights_.data(), cfg_.depth, k_);
    Eigen::Map<const Eigen::VectorXd> bias(weights_.data() +
                                               static_cast<std::size_t>(cfg_.depth) * k_,
                                           cfg_.depth);
    out_ = Tensor(out_shape_);
    Eigen::Map<Eigen::MatrixXd> out_mat(out_.data.data(), cfg_.depth, p);
    out_mat.noalias() = wmat * col_;
    out_mat.colwise() += bias;
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("conv");
    const int p = in_shape_.h * in_shape_.w;
    Eigen::Map<const Eigen::MatrixXd> dout(grad_out.data.data(), cfg_.depth, p);

    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        dw(grads_.data(), cfg_.depth, k_);
    Eigen::Map<Eigen::VectorXd> db(
        grads_.data() + static_cast<std::size_t>(cfg_.depth) * k_, cfg_.depth);
    dw.noalias() += dout * col_.transpose();
    db += dout.rowwise().sum();

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        wmat(weights_.data(), cfg_.depth, k_);
    dcol_.noalias() = wmat.transpose() * dout;

    // col2im scatter
    Tensor din(in_shape_);
    const int ic = in_shape_.c, w = in_shape_.w, h = in_shape_.h;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int pcol = y * w + x;
        int row = 0;
        for (int dy = 0; dy < cfg_.filter_h; ++dy) {
          const int iy = y + dy - pad_h_;
          for (int dx = 0; dx < cfg_.filter_w; ++dx, row += ic) {
            const int ix = x + dx - pad_w_;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            double* dst = &din.at(iy, ix, 0);
            const double* src = &dcol_(row, pcol);
            for (int ci = 0; ci < ic; ++ci) dst[ci] += src[ci];
          }
        }
      }
    return din;
  }

 private:
  void build_col(const Tensor& in) {
    const int h = in_shape_.h, w = in_shape_.w, ic = in_shape_.c;
    col_.resize(k_, h * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int pcol = y * w + x;
        int row = 0;
        for (int dy = 0; dy < cfg_.filter_h; ++dy) {
          const int iy = y + dy - pad_h_;
          for (int dx = 0; dx < cfg_.filter_w; ++dx, row += ic) {
            const int ix = x + dx - pad_w_;
            double* dst = &col_(row, pcol);
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
              std::fill(dst, dst + ic, 0.0);
            } else {
              const double* src = &in.at(iy, ix, 0);
              std::copy(src, src + ic, dst);
            }
          }
        }
      }
  }

  LayerConfig cfg_;
  int k_ = 0, pad_h_ = 0, pad_w_ = 0;
  std::vector<double> weights_, grads_;  // [depth x k] row-major, then bias
  Eigen::MatrixXd col_, dcol_;           // k x positions
  Tensor out_;
};

// ---------------------------------------------------------------------------

class MaxPoolLayer final : public Layer {
 public:
  MaxPoolLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    cfg_.validate();
    in_shape_ = in;
    const int oh = (in.h + cfg.stride_h - 1) / cfg.stride_h;
    const int ow = (in.w + cfg.stride_w - 1) / cfg.stride_w;
    out_shape_ = {oh, ow, in.c};
    const int pad_h = std::max(0, (oh - 1) * cfg.stride_h + cfg.filter_h - in.h);
    const int pad_w = std::max(0, (ow - 1) * cfg.stride_w + cfg.filter_w - in.w);
    pad_top_ = pad_h / 2;
    pad_left_ = pad_w / 2;
  }

  LayerConfig config() const override { return cfg_; }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "maxpool");
    out_ = Tensor(out_shape_);
    argmax_.assign(out_.size(), 0);
    std::size_t o = 0;
    for (int oy = 0; oy < out_shape_.h; ++oy)
      for (int ox = 0; ox < out_shape_.w; ++ox)
        for (int ch = 0; ch < out_shape_.c; ++ch, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (int dy = 0; dy < cfg_.filter_h; ++dy) {
            const int iy = oy * cfg_.stride_h - pad_top_ + dy;
            if (iy < 0 || iy >= in_shape_.h) continue;
            for (int dx = 0; dx < cfg_.filter_w; ++dx) {
              const int ix = ox * cfg_.stride_w - pad_left_ + dx;
              if (ix < 0 || ix >= in_shape_.w) continue;
              const double v = in.at(iy, ix, ch);
              if (v > best) {  // strict: first maximum wins on ties
                best = v;
                best_idx =
                    (static_cast<std::size_t>(iy) * in_shape_.w + ix) *
                        in_shape_.c + ch;
              }
            }
          }
          out_.data[o] = best;
          argmax_[o] = best_idx;
        }
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("maxpool");
    Tensor din(in_shape_);
    for (std::size_t o = 0; o < grad_out.size(); ++o)
      din.data[argmax_[o]] += grad_out.data[o];
    return din;
  }

 private:
  LayerConfig cfg_;
  int pad_top_ = 0, pad_left_ = 0;
  std::vector<std::size_t> argmax_;
  Tensor out_;
};

// ---------------------------------------------------------------------------

class FcLayer final : public Layer {
 public:
  FcLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    cfg_.validate();
    if (in.w != 1 || in.c != 1)
      throw std::invalid_argument(
          "fc expects a flat input; insert a flatten layer first (got " +
          in.str() + ")");
    in_shape_ = in;
    out_shape_ = {cfg.depth, 1, 1};
    weights_.assign(
        static_cast<std::size_t>(cfg.depth) * in.h + cfg.depth, 0.0);
    grads_.assign(weights_.size(), 0.0);
  }

  LayerConfig config() const override { return cfg_; }
  std::span<double> params() override { return weights_; }
  std::span<double> grads() override { return grads_; }

  void init_params(Rng& rng) override {
    const double limit = std::sqrt(6.0 / in_shape_.h);
    for (int i = 0; i < cfg_.depth * in_shape_.h; ++i)
      weights_[static_cast<std::size_t>(i)] = rng.uniform(-limit, limit);
  }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "fc");
    const int ni = in_shape_.h, no = cfg_.depth;
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        wmat(weights_.data(), no, ni);
    Eigen::Map<const Eigen::VectorXd> bias(
        weights_.data() + static_cast<std::size_t>(no) * ni, no);
    out_ = Tensor(out_shape_);
    out_.as_vector() = wmat * in.as_vector() + bias;
    if (train) in_cache_ = in;
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("fc");
    const int ni = in_shape_.h, no = cfg_.depth;
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>
        dw(grads_.data(), no, ni);
    Eigen::Map<Eigen::VectorXd> db(
        grads_.data() + static_cast<std::size_t>(no) * ni, no);
    dw.noalias() += grad_out.as_vector() * in_cache_.as_vector().transpose();
    db += grad_out.as_vector();

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>
        wmat(weights_.data(), no, ni);
    Tensor din(in_shape_);
    din.as_vector() = wmat.transpose() * grad_out.as_vector();
    return din;
  }

 private:
  LayerConfig cfg_;
  std::vector<double> weights_, grads_;  // [no x ni] row-major, then bias
  Tensor in_cache_, out_;
};

// ---------------------------------------------------------------------------

class ReluLayer final : public Layer {
 public:
  ReluLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    in_shape_ = out_shape_ = in;
  }
  LayerConfig config() const override { return cfg_; }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "relu");
    out_ = in;
    for (double& v : out_.data) v = v > 0.0 ? v : 0.0;
    if (train) in_cache_ = in;
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("relu");
    Tensor din = grad_out;
    for (std::size_t i = 0; i < din.size(); ++i)
      if (in_cache_.data[i] <= 0.0) din.data[i] = 0.0;
    return din;
  }

 private:
  LayerConfig cfg_;
  Tensor in_cache_, out_;
};

// ---------------------------------------------------------------------------

// Softmax over the full (flat) activation vector.
class SoftmaxLayer final : public Layer {
 public:
  SoftmaxLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    in_shape_ = out_shape_ = in;
  }
  LayerConfig config() const override { return cfg_; }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "softmax");
    out_ = in;
    const double mx = out_.as_vector().maxCoeff();
    double sum = 0.0;
    for (double& v : out_.data) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : out_.data) v /= sum;
    have_cache_ = train;
    return out_;
  }

  // din_i = p_i * (g_i - sum_j g_j p_j)
  Tensor backward(const Tensor& grad_out) override {
    require_cache("softmax");
    const double dot = grad_out.as_vector().dot(out_.as_vector());
    Tensor din(in_shape_);
    for (std::size_t i = 0; i < din.size(); ++i)
      din.data[i] = out_.data[i] * (grad_out.data[i] - dot);
    return din;
  }

 private:
  LayerConfig cfg_;
  Tensor out_;
};

// ---------------------------------------------------------------------------

// Inverted dropout: kept units are scaled by 1/(1-rate) at train time so
// eval mode is the identity.
class DropoutLayer final : public Layer {
 public:
  DropoutLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    cfg_.validate();
    in_shape_ = out_shape_ = in;
  }
  LayerConfig config() const override { return cfg_; }

  const Tensor& forward(const Tensor& in, bool train, Rng* rng) override {
    check_in(in, "dropout");
    out_ = in;
    if (train && cfg_.dropout_rate > 0.0) {
      if (rng == nullptr)
        throw std::invalid_argument("dropout: training forward needs an rng");
      const double keep = 1.0 - cfg_.dropout_rate;
      mask_.resize(out_.size());
      for (std::size_t i = 0; i < out_.size(); ++i) {
        mask_[i] = rng->uniform() < keep ? 1.0 / keep : 0.0;
        out_.data[i] *= mask_[i];
      }
    }
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("dropout");
    Tensor din = grad_out;
    if (cfg_.dropout_rate > 0.0)
      for (std::size_t i = 0; i < din.size(); ++i) din.data[i] *= mask_[i];
    return din;
  }

  std::span<const double> last_mask() const { return mask_; }

 private:
  LayerConfig cfg_;
  std::vector<double> mask_;
  Tensor out_;
};

// ---------------------------------------------------------------------------

class FlattenLayer final : public Layer {
 public:
  FlattenLayer(const LayerConfig& cfg, Shape3 in) : cfg_(cfg) {
    in_shape_ = in;
    out_shape_ = {in.count(), 1, 1};
  }
  LayerConfig config() const override { return cfg_; }

  const Tensor& forward(const Tensor& in, bool train, Rng*) override {
    check_in(in, "flatten");
    out_ = in;
    out_.shape = out_shape_;
    have_cache_ = train;
    return out_;
  }

  Tensor backward(const Tensor& grad_out) override {
    require_cache("flatten");
    Tensor din = grad_out;
    din.shape = in_shape_;
    return din;
  }

 private:
  LayerConfig cfg_;
  Tensor out_;
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<Layer> make_layer(const LayerConfig& cfg, Shape3 in) {
  switch (cfg.kind) {
    case LayerKind::conv: return std::make_unique<ConvLayer>(cfg, in);
    case LayerKind::maxpool: return std::make_unique<MaxPoolLayer>(cfg, in);
    case LayerKind::fc: return std::make_unique<FcLayer>(cfg, in);
    case LayerKind::relu: return std::make_unique<ReluLayer>(cfg, in);
    case LayerKind::softmax: return std::make_unique<SoftmaxLayer>(cfg, in);
    case LayerKind::dropout: return std::make_unique<DropoutLayer>(cfg, in);
    case LayerKind::flatten: return std::make_unique<FlattenLayer>(cfg, in);
  }
  throw std::logic_error("make_layer: unhandled kind");
}

}  // namespace emoanim

#endif  // EMOANIM_LAYERS_HPP_
