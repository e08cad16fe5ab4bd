// tests/test_nn.cpp

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "emoanim/architectures.hpp"
#include "emoanim/adam.hpp"
#include "emoanim/losses.hpp"
#include "emoanim/network.hpp"
#include "emoanim/trainer.hpp"
#include "support/test_util.hpp"

namespace emoanim {
namespace {

Tensor random_tensor(Shape3 s, Rng& rng) {
  Tensor t(s);
  for (double& v : t.data) v = rng.normal();
  return t;
}

std::vector<double> random_target(std::size_t n, Rng& rng) {
  std::vector<double> t(n);
  for (double& v : t) v = rng.normal();
  return t;
}

// ---------------------------------------------------------------------------
// Architecture wiring

TEST_CASE("recognition network shapes follow the fixed chain", "[nn][arch]") {
  Network net({40, 15, 1}, dern_layers(7), 1);
  struct Expect { int idx; Shape3 s; };
  // conv relu pool, x3, flatten fc relu dropout fc softmax
  const std::vector<Expect> chain = {
      {0, {40, 15, 32}}, {2, {20, 8, 32}},  {3, {20, 8, 64}},
      {5, {10, 4, 64}},  {6, {10, 4, 128}}, {8, {5, 2, 128}},
      {9, {1280, 1, 1}}, {10, {256, 1, 1}}, {13, {7, 1, 1}},
  };
  for (const auto& e : chain) {
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().h == e.s.h);
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().w == e.s.w);
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().c == e.s.c);
  }
  CHECK(net.output_shape().h == 7);
  // independently summed parameter total for the full-width network
  CHECK(net.param_count() == 586759u);
  CHECK_FALSE(is_frequency_only(net.configs()));
}

TEST_CASE("regression network collapses only the frequency axis",
          "[nn][arch]") {
  Network net({40, 15, 1}, dsrn_layers(90), 1);
  struct Expect { int idx; Shape3 s; };
  const std::vector<Expect> chain = {
      {0, {40, 15, 32}},  {2, {20, 15, 32}}, {3, {20, 15, 64}},
      {5, {10, 15, 64}},  {6, {10, 15, 128}}, {8, {5, 15, 128}},
      {9, {5, 15, 128}},  {11, {3, 15, 128}}, {12, {5760, 1, 1}},
      {13, {1024, 1, 1}}, {16, {500, 1, 1}},  {19, {90, 1, 1}},
  };
  for (const auto& e : chain) {
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().h == e.s.h);
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().w == e.s.w);
    CHECK(net.layer(static_cast<std::size_t>(e.idx)).out_shape().c == e.s.c);
  }
  // time axis untouched until flatten
  for (std::size_t i = 0; i < 12; ++i)
    CHECK(net.layer(i).out_shape().w == 15);
  CHECK(net.param_count() == 6557718u);
  CHECK(is_frequency_only(net.configs()));
}

TEST_CASE("width scaling shrinks depths but never output dims", "[nn][arch]") {
  CHECK(scaled_depth(32, 0.125) == 4);
  CHECK(scaled_depth(128, 0.125) == 16);
  CHECK(scaled_depth(3, 0.01) == 1);  // floor at one filter

  auto dern = dern_layers(7, 0.125);
  CHECK(dern.front().depth == 4);
  CHECK(dern[dern.size() - 2].depth == 7);  // class count preserved

  auto dsrn = dsrn_layers(90, 0.125);
  CHECK(dsrn.back().depth == 90);
  Network small({40, 15, 1}, dsrn, 1);
  CHECK(small.param_count() < 6557718u / 10);
}

// ---------------------------------------------------------------------------
// Layer semantics

TEST_CASE("a 1x1 identity conv passes its input through", "[nn][conv]") {
  Network net({4, 3, 1}, {LayerConfig::conv(1, 1, 1)}, 1);
  auto params = net.param_blocks();
  REQUIRE(params.size() == 1);
  REQUIRE(params[0].size() == 2);  // one weight, one bias
  params[0][0] = 1.0;
  params[0][1] = 0.0;

  Rng rng(2);
  Tensor in = random_tensor({4, 3, 1}, rng);
  const Tensor& out = net.forward(in);
  for (std::size_t i = 0; i < in.size(); ++i)
    CHECK(out.data[i] == in.data[i]);
}

TEST_CASE("same-padding conv keeps spatial size", "[nn][conv]") {
  Network net({7, 5, 2}, {LayerConfig::conv(3, 5, 5)}, 1);
  CHECK(net.output_shape().h == 7);
  CHECK(net.output_shape().w == 5);
  CHECK(net.output_shape().c == 3);
  Rng rng(3);
  Tensor in = random_tensor({7, 5, 2}, rng);
  CHECK(net.forward(in).all_finite());
}

TEST_CASE("maxpool covers the input with ceil-division and ignores padding",
          "[nn][pool]") {
  // 5 -> ceil(5/2) = 3 along both axes
  Network net({5, 5, 1}, {LayerConfig::maxpool(3, 3, 2, 2)}, 1);
  CHECK(net.output_shape().h == 3);
  CHECK(net.output_shape().w == 3);

  // all-negative input: max must come from real cells, not zero padding
  Tensor in({5, 5, 1});
  for (double& v : in.data) v = -2.0;
  const Tensor& out = net.forward(in);
  for (double v : out.data) CHECK(v == -2.0);
}

TEST_CASE("maxpool ties route gradient to the first maximum", "[nn][pool]") {
  Network net({2, 2, 1}, {LayerConfig::maxpool(2, 2, 2, 2)}, 1);
  Tensor in({2, 2, 1});
  for (double& v : in.data) v = 1.5;  // four-way tie
  net.forward(in, /*train=*/true);

  Tensor g({1, 1, 1});
  g.data[0] = 1.0;
  Tensor din = net.backward(g);
  CHECK(din.at(0, 0, 0) == 1.0);
  CHECK(din.at(0, 1, 0) == 0.0);
  CHECK(din.at(1, 0, 0) == 0.0);
  CHECK(din.at(1, 1, 0) == 0.0);
}

TEST_CASE("softmax outputs a shift-invariant distribution", "[nn][softmax]") {
  Network net({5, 1, 1}, {LayerConfig::softmax()}, 1);
  Rng rng(5);
  Tensor in = random_tensor({5, 1, 1}, rng);
  Tensor shifted = in;
  for (double& v : shifted.data) v += 123.0;

  Tensor a = net.forward(in);
  double sum = 0;
  for (double v : a.data) {
    CHECK(v > 0.0);
    sum += v;
  }
  CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));

  const Tensor& b = net.forward(shifted);
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK_THAT(b.data[i], Catch::Matchers::WithinAbs(a.data[i], 1e-12));
}

TEST_CASE("softmax + cross-entropy reduces to p minus one-hot",
          "[nn][softmax]") {
  Network net({6, 1, 1}, {LayerConfig::softmax()}, 1);
  Rng rng(6);
  Tensor logits = random_tensor({6, 1, 1}, rng);
  const Tensor probs = net.forward(logits, /*train=*/true);

  const int label = 2;
  Tensor g(probs.shape);
  cross_entropy_loss(probs.data, label, g.data);
  Tensor din = net.backward(g);
  for (int i = 0; i < 6; ++i) {
    const double want = probs.data[static_cast<std::size_t>(i)] -
                        (i == label ? 1.0 : 0.0);
    CHECK_THAT(din.data[static_cast<std::size_t>(i)],
               Catch::Matchers::WithinAbs(want, 1e-12));
  }
}

TEST_CASE("cross-entropy of a uniform distribution is log n", "[nn][loss]") {
  std::vector<double> p(7, 1.0 / 7.0);
  CHECK_THAT(cross_entropy_value(p, 3),
             Catch::Matchers::WithinAbs(1.9459101490553132, 1e-12));  // ln 7
  // clamp keeps a zero probability finite
  std::vector<double> z = {1.0, 0.0};
  CHECK(std::isfinite(cross_entropy_value(z, 1)));
}

TEST_CASE("mse gradient matches finite differences", "[nn][loss]") {
  Rng rng(8);
  std::vector<double> pred = random_target(9, rng);
  std::vector<double> target = random_target(9, rng);
  std::vector<double> grad(9);
  mse_loss(pred, target, grad);

  const double h = 1e-6;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    std::vector<double> up = pred, dn = pred;
    up[i] += h;
    dn[i] -= h;
    const double fd = (mse_value(up, target) - mse_value(dn, target)) / (2 * h);
    CHECK_THAT(grad[i], Catch::Matchers::WithinAbs(fd, 1e-8));
  }
}

TEST_CASE("dropout is identity at eval and unbiased at train",
          "[nn][dropout]") {
  const int n = 5000;
  Network net({n, 1, 1}, {LayerConfig::dropout(0.5)}, 1);
  Tensor ones({n, 1, 1});
  for (double& v : ones.data) v = 1.0;

  const Tensor& eval_out = net.forward(ones, /*train=*/false);
  for (double v : eval_out.data) CHECK(v == 1.0);

  CHECK_THROWS_AS(net.forward(ones, /*train=*/true, nullptr),
                  std::invalid_argument);

  Rng rng(99);
  const Tensor& out = net.forward(ones, /*train=*/true, &rng);
  int kept = 0;
  for (double v : out.data) {
    if (v != 0.0) {
      CHECK(v == 2.0);  // inverted scaling by 1/keep
      ++kept;
    }
  }
  // binomial(n, 0.5): 3 sigma ~ 0.021
  CHECK(std::abs(kept / static_cast<double>(n) - 0.5) < 0.022);
}

// ---------------------------------------------------------------------------
// Gradient checks

TEST_CASE("conv stack gradients agree with finite differences",
          "[nn][gradcheck]") {
  Network net({6, 5, 2},
              {LayerConfig::conv(3, 3, 3), LayerConfig::relu(),
               LayerConfig::maxpool(2, 2, 2, 2), LayerConfig::flatten(),
               LayerConfig::fc(4)},
              11);
  Rng rng(12);
  Tensor in = random_tensor({6, 5, 2}, rng);
  std::vector<double> target = random_target(4, rng);

  auto loss = [&] { return mse_value(net.forward(in).data, target); };
  auto backprop = [&] {
    const Tensor& out = net.forward(in, /*train=*/true);
    Tensor g(out.shape);
    mse_loss(out.data, target, g.data);
    net.backward(g);
  };
  auto res = test::finite_diff_check(net, loss, backprop);
  CHECK(res.checked == net.param_count());
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("input gradients agree with finite differences", "[nn][gradcheck]") {
  Network net({5, 4, 1},
              {LayerConfig::conv(2, 3, 3), LayerConfig::relu(),
               LayerConfig::flatten(), LayerConfig::fc(3)},
              13);
  Rng rng(14);
  Tensor in = random_tensor({5, 4, 1}, rng);
  std::vector<double> target = random_target(3, rng);

  const Tensor& out = net.forward(in, /*train=*/true);
  Tensor g(out.shape);
  mse_loss(out.data, target, g.data);
  net.zero_grads();
  Tensor din = net.backward(g);

  const double h = 1e-5;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double saved = in.data[i];
    in.data[i] = saved + h;
    const double up = mse_value(net.forward(in).data, target);
    in.data[i] = saved - h;
    const double dn = mse_value(net.forward(in).data, target);
    in.data[i] = saved;
    const double fd = (up - dn) / (2 * h);
    max_rel = std::max(max_rel, std::abs(fd - din.data[i]) /
                                    std::max(std::abs(fd) + std::abs(din.data[i]),
                                             1e-3));
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("classifier gradients survive softmax and cross-entropy",
          "[nn][gradcheck]") {
  Network net({8, 7, 1},
              {LayerConfig::conv(3, 3, 3), LayerConfig::relu(),
               LayerConfig::maxpool(3, 3, 2, 2), LayerConfig::conv(4, 3, 3),
               LayerConfig::relu(), LayerConfig::maxpool(2, 2, 2, 2),
               LayerConfig::flatten(), LayerConfig::fc(10),
               LayerConfig::relu(), LayerConfig::fc(5),
               LayerConfig::softmax()},
              15);
  Rng rng(16);
  Tensor in = random_tensor({8, 7, 1}, rng);
  const int label = 3;

  auto loss = [&] { return cross_entropy_value(net.forward(in).data, label); };
  auto backprop = [&] {
    const Tensor& out = net.forward(in, /*train=*/true);
    Tensor g(out.shape);
    cross_entropy_loss(out.data, label, g.data);
    net.backward(g);
  };
  auto res = test::finite_diff_check(net, loss, backprop);
  CHECK(res.max_rel_err < 1e-4);
}

TEST_CASE("dropout gradients check out under a frozen mask",
          "[nn][gradcheck]") {
  Network net({6, 1, 1},
              {LayerConfig::fc(8), LayerConfig::relu(),
               LayerConfig::dropout(0.4), LayerConfig::fc(3),
               LayerConfig::softmax()},
              17);
  Rng rng(18);
  Tensor in = random_tensor({6, 1, 1}, rng);
  const int label = 1;
  const std::uint64_t mask_seed = 2024;

  // every evaluation reseeds the mask stream, so the loss stays a pure
  // function of the parameters
  auto loss = [&] {
    Rng mask_rng(mask_seed);
    return cross_entropy_value(net.forward(in, true, &mask_rng).data, label);
  };
  auto backprop = [&] {
    Rng mask_rng(mask_seed);
    const Tensor& out = net.forward(in, true, &mask_rng);
    Tensor g(out.shape);
    cross_entropy_loss(out.data, label, g.data);
    net.backward(g);
  };
  auto res = test::finite_diff_check(net, loss, backprop);
  CHECK(res.max_rel_err < 1e-4);
}

// ---------------------------------------------------------------------------
// Optimizer

TEST_CASE("adam ignores zero gradients and normalizes the first step",
          "[nn][adam]") {
  std::vector<double> w = {1.0, -2.0, 3.0};
  std::vector<double> g = {0.0, 0.0, 0.0};
  AdamConfig cfg;
  Adam opt({std::span<double>(w)}, cfg);
  opt.step({std::span<double>(g)});
  CHECK(w == std::vector<double>{1.0, -2.0, 3.0});

  // on a fresh optimizer the bias-corrected step 1 is lr * sign(g),
  // independent of the gradient magnitude
  std::vector<double> w2 = {1.0, -2.0, 3.0};
  Adam fresh({std::span<double>(w2)}, cfg);
  g = {0.3, -40.0, 1e-4};
  fresh.step({std::span<double>(g)});
  CHECK_THAT(w2[0], Catch::Matchers::WithinAbs(1.0 - cfg.lr, 1e-6));
  CHECK_THAT(w2[1], Catch::Matchers::WithinAbs(-2.0 + cfg.lr, 1e-6));
  CHECK_THAT(w2[2], Catch::Matchers::WithinAbs(3.0 - cfg.lr, 1e-6));
}

TEST_CASE("adam minimizes a quadratic bowl", "[nn][adam]") {
  std::vector<double> w = {5.0, -4.0, 0.5, 2.0};
  const std::vector<double> c = {1.0, 2.0, -0.5, 0.0};
  AdamConfig cfg;
  cfg.lr = 0.05;
  Adam opt({std::span<double>(w)}, cfg);

  std::vector<double> g(4);
  for (int it = 0; it < 2000; ++it) {
    for (int i = 0; i < 4; ++i) g[i] = 2.0 * (w[i] - c[i]);
    opt.step({std::span<double>(g)});
  }
  double dist = 0;
  for (int i = 0; i < 4; ++i) dist += (w[i] - c[i]) * (w[i] - c[i]);
  CHECK(std::sqrt(dist) < 1e-3);
  CHECK(opt.step_count() == 2000);
}

// ---------------------------------------------------------------------------
// Training loop + persistence

ExampleSet blob_dataset(int per_class, int window, Rng& rng) {
  // class 0 lights up the top band, class 1 the bottom band
  auto seqs = std::make_shared<std::vector<SpectralSequence>>();
  ExampleSet set;
  set.window = window;
  for (int k = 0; k < 2 * per_class; ++k) {
    const int label = k % 2;
    SpectralSequence s;
    s.frames.resize(6, 1);
    for (int i = 0; i < 6; ++i)
      s.frames(i, 0) = 0.3 * rng.normal() +
                       ((label == 0) == (i < 3) ? 2.0 : -2.0);
    seqs->push_back(std::move(s));
    set.refs.push_back({k, 0});
    set.labels.push_back(label);
  }
  set.sequences = seqs;
  return set;
}

TEST_CASE("training separates an easy two-class problem", "[nn][train]") {
  Rng rng(21);
  ExampleSet train = blob_dataset(20, 3, rng);
  Network net(train.input_shape(),
              {LayerConfig::conv(2, 3, 3), LayerConfig::relu(),
               LayerConfig::flatten(), LayerConfig::fc(2),
               LayerConfig::softmax()},
              derive_seed(33, "init"));

  TrainOptions opt;
  opt.epochs = 25;
  opt.batch_size = 8;
  opt.seed = 33;
  TrainStats stats = train_network(net, train, nullptr, opt);
  REQUIRE(stats.train_loss.size() == 25);
  CHECK(stats.train_loss.back() < 0.5 * stats.train_loss.front());
  CHECK(evaluate_accuracy(net, train) > 0.95);
  CHECK(std::isnan(stats.val_loss.back()));  // no validation set given

  auto preds = predict_labels(net, train);
  std::size_t hits = 0;
  for (std::size_t k = 0; k < preds.size(); ++k)
    hits += preds[k] == train.labels[k];
  CHECK(static_cast<double>(hits) / preds.size() ==
        evaluate_accuracy(net, train));
}

TEST_CASE("training is bit-reproducible for a fixed seed", "[nn][train]") {
  Rng rng(22);
  ExampleSet train = blob_dataset(10, 3, rng);

  auto run = [&](std::uint64_t seed) {
    Network net(train.input_shape(),
                {LayerConfig::flatten(), LayerConfig::fc(8),
                 LayerConfig::relu(), LayerConfig::dropout(0.3),
                 LayerConfig::fc(2), LayerConfig::softmax()},
                derive_seed(seed, "init"));
    TrainOptions opt;
    opt.epochs = 4;
    opt.batch_size = 8;
    opt.seed = seed;
    train_network(net, train, nullptr, opt);
    std::vector<double> flat;
    for (auto p : net.param_blocks()) flat.insert(flat.end(), p.begin(), p.end());
    return flat;
  };

  CHECK(run(5) == run(5));
  CHECK(run(5) != run(6));
}

TEST_CASE("network files round-trip and detect corruption", "[nn][io]") {
  test::TempDir tmp("emoanim_net_io");
  Network net({6, 5, 1},
              {LayerConfig::conv(2, 3, 3), LayerConfig::relu(),
               LayerConfig::maxpool(2, 2, 2, 2), LayerConfig::flatten(),
               LayerConfig::fc(3), LayerConfig::softmax()},
              77);
  const auto a = tmp.path() / "a.eann";
  const auto b = tmp.path() / "b.eann";
  net.save(a);

  Network loaded = Network::load(a);
  CHECK(loaded.param_count() == net.param_count());
  CHECK(loaded.seed() == net.seed());
  CHECK(loaded.configs().size() == net.configs().size());

  // parameters survive the float32 narrowing while the file stays stable
  loaded.save(b);
  CHECK(read_text_file(a) == read_text_file(b));

  Rng rng(78);
  Tensor in = random_tensor({6, 5, 1}, rng);
  Tensor o1 = net.forward(in);
  const Tensor& o2 = loaded.forward(in);
  for (std::size_t i = 0; i < o1.size(); ++i)
    CHECK_THAT(o2.data[i], Catch::Matchers::WithinAbs(o1.data[i], 1e-5));

  // flip one blob byte: checksum must catch it
  std::string bytes = read_text_file(a);
  bytes[bytes.size() - 10] = static_cast<char>(bytes[bytes.size() - 10] ^ 0x40);
  write_text_file(a, bytes);
  CHECK_THROWS_WITH(Network::load(a),
                    Catch::Matchers::ContainsSubstring("checksum"));
}

TEST_CASE("network rejects mismatched input shapes", "[nn]") {
  Network net({4, 3, 1}, {LayerConfig::flatten(), LayerConfig::fc(2)}, 1);
  Tensor wrong({3, 4, 1});
  CHECK_THROWS_AS(net.forward(wrong), std::invalid_argument);
  // backward before a training forward is a usage error
  Network fresh({4, 3, 1}, {LayerConfig::flatten(), LayerConfig::fc(2)}, 1);
  Tensor g({2, 1, 1});
  CHECK_THROWS(fresh.backward(g));
}

}  // namespace
}  // namespace emoanim
