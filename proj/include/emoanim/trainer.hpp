// emoanim/trainer.hpp

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

// Minibatch training loop shared by DERN (classification) and DSRN
// (regression). Examples are frame references into shared spectral
// sequences; the 40 x Ka input window is materialized on demand so a large
// corpus does not hold one image per frame.

#ifndef EMOANIM_TRAINER_HPP_
#define EMOANIM_TRAINER_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoanim/adam.hpp"
#include "emoanim/losses.hpp"
#include "emoanim/mfsc.hpp"
#include "emoanim/network.hpp"
#include "emoanim/rng.hpp"
#include "emoanim/tensor.hpp"

namespace emoanim {

struct FrameRef {
  int seq = 0;    // index into ExampleSet::sequences
  int frame = 0;  // center frame within that sequence
};

// One supervised set (train, val or test). Classification sets fill
// `labels`; regression sets fill `targets` (one column per example).
struct ExampleSet {
  std::shared_ptr<const std::vector<SpectralSequence>> sequences;
  int window = 15;  // Ka
  std::vector<FrameRef> refs;
  std::vector<int> labels;
  Eigen::MatrixXd targets;  // target_dim x refs.size(), or empty

  std::size_t size() const { return refs.size(); }
  bool empty() const { return refs.empty(); }

  bool has_labels() const { return labels.size() == refs.size(); }
  bool has_targets() const {
    return targets.cols() == static_cast<Eigen::Index>(refs.size()) &&
           targets.rows() > 0;
  }

  Tensor input(std::size_t k) const {
    const FrameRef& r = refs.at(k);
    const SpectralSequence& s = sequences->at(static_cast<std::size_t>(r.seq));
    return Tensor::from_matrix(spectral_window(s, r.frame, window));
  }

  Shape3 input_shape() const {
    if (!sequences || sequences->empty())
      throw std::logic_error("example set has no sequences");
    return {static_cast<int>(sequences->front().frames.rows()), window, 1};
  }

  void validate() const {
    if (!sequences) throw std::logic_error("example set has no sequences");
    if (!has_labels() && !has_targets())
      throw std::logic_error("example set has neither labels nor targets");
    for (const FrameRef& r : refs) {
      if (r.seq < 0 || static_cast<std::size_t>(r.seq) >= sequences->size())
        throw std::out_of_range("frame ref: bad sequence index");
      if (r.frame < 0 || r.frame >= sequences->at(static_cast<std::size_t>(r.seq)).size())
        throw std::out_of_range("frame ref: bad frame index");
    }
  }
};

enum class Objective { cross_entropy, mse };

struct TrainOptions {
  int epochs = 10;
  int batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 1;  // drives shuffling and dropout masks
  Objective objective = Objective::cross_entropy;
  // Called after each epoch with (epoch, mean train loss, mean val loss);
  // val loss is NaN when no validation set was given.
  std::function<void(int, double, double)> on_epoch;
};

struct TrainStats {
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
};

inline double example_loss_grad(Objective obj, const Tensor& out,
                                const ExampleSet& set, std::size_t k,
                                Tensor* grad) {
  *grad = Tensor(out.shape);
  if (obj == Objective::cross_entropy) {
    if (!set.has_labels())
      throw std::logic_error("cross-entropy training needs labels");
    return cross_entropy_loss(out.data, set.labels[k], grad->data);
  }
  if (!set.has_targets()) throw std::logic_error("mse training needs targets");
  const auto t = set.targets.col(static_cast<Eigen::Index>(k));
  if (t.size() != static_cast<Eigen::Index>(out.size()))
    throw std::invalid_argument("target dim does not match network output");
  return mse_loss(out.data, std::span<const double>(t.data(), static_cast<std::size_t>(t.size())),
                  grad->data);
}

inline double evaluate_loss(Network& net, const ExampleSet& set,
                            Objective obj) {
  if (set.empty()) throw std::invalid_argument("evaluate_loss: empty set");
  double sum = 0.0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Tensor& out = net.forward(set.input(k), /*train=*/false);
    if (obj == Objective::cross_entropy) {
      sum += cross_entropy_value(out.data, set.labels[k]);
    } else {
      const auto t = set.targets.col(static_cast<Eigen::Index>(k));
      sum += mse_value(out.data, std::span<const double>(
                                     t.data(), static_cast<std::size_t>(t.size())));
    }
  }
  return sum / static_cast<double>(set.size());
}

inline double evaluate_accuracy(Network& net, const ExampleSet& set) {
  if (!set.has_labels())
    throw std::invalid_argument("evaluate_accuracy needs labels");
  std::size_t hit = 0;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Tensor& out = net.forward(set.input(k), /*train=*/false);
    Eigen::Index arg = 0;
    Eigen::Map<const Eigen::VectorXd>(out.data.data(),
                                      static_cast<Eigen::Index>(out.size()))
        .maxCoeff(&arg);
    if (static_cast<int>(arg) == set.labels[k]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(set.size());
}

inline std::vector<int> predict_labels(Network& net, const ExampleSet& set) {
  std::vector<int> out(set.size());
  for (std::size_t k = 0; k < set.size(); ++k) {
    const Tensor& o = net.forward(set.input(k), /*train=*/false);
    Eigen::Index arg = 0;
    Eigen::Map<const Eigen::VectorXd>(o.data.data(),
                                      static_cast<Eigen::Index>(o.size()))
        .maxCoeff(&arg);
    out[k] = static_cast<int>(arg);
  }
  return out;
}

// Shuffled minibatch SGD with Adam. Gradients are accumulated over the batch
// and scaled by 1/batch before the step, so the step size does not depend on
// a ragged final batch.
inline TrainStats train_network(Network& net, const ExampleSet& train,
                                const ExampleSet* val,
                                const TrainOptions& opt) {
  train.validate();
  if (val) val->validate();
  if (train.empty()) throw std::invalid_argument("train_network: empty set");
  if (opt.epochs <= 0 || opt.batch_size <= 0)
    throw std::invalid_argument("train_network: bad epochs or batch size");

  Adam adam(net.param_blocks(), opt.adam);
  Rng order_rng(derive_seed(opt.seed, "batch-order"));
  Rng dropout_rng(derive_seed(opt.seed, "dropout"));

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainStats stats;
  Tensor grad;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    order_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t take =
          std::min<std::size_t>(opt.batch_size, order.size() - pos);
      net.zero_grads();
      for (std::size_t b = 0; b < take; ++b) {
        const std::size_t k = order[pos + b];
        const Tensor& out =
            net.forward(train.input(k), /*train=*/true, &dropout_rng);
        epoch_loss += example_loss_grad(opt.objective, out, train, k, &grad);
        net.backward(grad);
      }
      net.scale_grads(1.0 / static_cast<double>(take));
      adam.step(net.grad_blocks());
      pos += take;
    }
    const double train_mean = epoch_loss / static_cast<double>(train.size());
    const double val_mean =
        (val && !val->empty())
            ? evaluate_loss(net, *val, opt.objective)
            : std::numeric_limits<double>::quiet_NaN();
    stats.train_loss.push_back(train_mean);
    stats.val_loss.push_back(val_mean);
    if (opt.on_epoch) opt.on_epoch(epoch, train_mean, val_mean);
  }
  return stats;
}

}  // namespace emoanim

#endif  // EMOANIM_TRAINER_HPP_
