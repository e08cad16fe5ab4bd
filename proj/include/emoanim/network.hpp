// emoanim/network.hpp

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

#ifndef EMOANIM_NETWORK_HPP_
#define EMOANIM_NETWORK_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "emoanim/io_util.hpp"
#include "emoanim/layers.hpp"
#include "emoanim/rng.hpp"
#include "emoanim/tensor.hpp"

namespace emoanim {

// A plain sequential stack. Construction wires up layer shapes from the input
// shape; init seeds all weights from a single Rng so a (config, seed) pair
// pins the whole parameter vector.
class Network {
 public:
  Network() = default;

  Network(Shape3 input, std::vector<LayerConfig> configs, std::uint64_t seed)
      : input_shape_(input), seed_(seed) {
    Shape3 cur = input;
    for (const LayerConfig& cfg : configs) {
      cfg.validate();
      layers_.push_back(make_layer(cfg, cur));
      cur = layers_.back()->out_shape();
    }
    Rng rng(seed);
    for (auto& l : layers_) l->init_params(rng);
  }

  Shape3 input_shape() const { return input_shape_; }
  Shape3 output_shape() const {
    return layers_.empty() ? input_shape_ : layers_.back()->out_shape();
  }
  std::uint64_t seed() const { return seed_; }
  std::size_t layer_count() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  std::vector<LayerConfig> configs() const {
    std::vector<LayerConfig> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l->config());
    return out;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l->params().size();
    return n;
  }

  // Parameter/gradient storage stays inside the layers; optimizers walk the
  // blocks in layer order.
  std::vector<std::span<double>> param_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_)
      if (!l->params().empty()) out.push_back(l->params());
    return out;
  }
  std::vector<std::span<double>> grad_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : layers_)
      if (!l->grads().empty()) out.push_back(l->grads());
    return out;
  }

  const Tensor& forward(const Tensor& in, bool train = false,
                        Rng* dropout_rng = nullptr) {
    if (!(in.shape == input_shape_))
      throw std::invalid_argument("network: input shape " + in.shape.str() +
                                  ", expected " + input_shape_.str());
    const Tensor* cur = &in;
    for (auto& l : layers_) cur = &l->forward(*cur, train, dropout_rng);
    return *cur;
  }

  // Accumulates into layer gradients; returns the gradient wrt the input.
  Tensor backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
      g = (*it)->backward(g);
    return g;
  }

  void zero_grads() {
    for (auto& l : layers_)
      for (double& v : l->grads()) v = 0.0;
  }

  void scale_grads(double s) {
    for (auto& l : layers_)
      for (double& v : l->grads()) v *= s;
  }

  // ---- serialization -----------------------------------------------------
  //
  // File layout: magic "EANN1\n", u32 header byte length, JSON header,
  // float32 little-endian parameter blob (layer order), u32 CRC32 of the
  // blob. Doubles are narrowed to float32 on save.

  static constexpr char kMagic[6] = {'E', 'A', 'N', 'N', '1', '\n'};

  void save(const std::filesystem::path& path) const {
    nlohmann::json hdr;
    hdr["input"] = {input_shape_.h, input_shape_.w, input_shape_.c};
    hdr["seed"] = seed_;
    nlohmann::json jl = nlohmann::json::array();
    for (const auto& l : layers_) {
      const LayerConfig c = l->config();
      nlohmann::json j;
      j["kind"] = kind_name(c.kind);
      switch (c.kind) {
        case LayerKind::conv:
          j["depth"] = c.depth;
          j["filter"] = {c.filter_h, c.filter_w};
          break;
        case LayerKind::maxpool:
          j["filter"] = {c.filter_h, c.filter_w};
          j["stride"] = {c.stride_h, c.stride_w};
          break;
        case LayerKind::fc:
          j["depth"] = c.depth;
          break;
        case LayerKind::dropout:
          j["rate"] = c.dropout_rate;
          break;
        default:
          break;
      }
      jl.push_back(j);
    }
    hdr["layers"] = jl;

    std::vector<double> all;
    all.reserve(param_count_const());
    for (const auto& l : layers_) {
      auto p = const_cast<Layer&>(*l).params();
      all.insert(all.end(), p.begin(), p.end());
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out.write(kMagic, sizeof kMagic);
    const std::string hs = hdr.dump();
    write_u32le(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    write_f32_blob(out, all);
    write_u32le(out, crc32_of_f32(all));
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }

  static Network load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::string(magic, sizeof magic) != std::string(kMagic, sizeof kMagic))
      throw std::runtime_error("not a network file: " + path.string());
    const std::uint32_t hlen = read_u32le(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) throw std::runtime_error("truncated header: " + path.string());
    const nlohmann::json hdr = nlohmann::json::parse(hs);

    const auto& ji = hdr.at("input");
    Shape3 input{ji.at(0).get<int>(), ji.at(1).get<int>(), ji.at(2).get<int>()};
    std::vector<LayerConfig> configs;
    for (const auto& j : hdr.at("layers")) {
      LayerConfig c;
      c.kind = kind_from_name(j.at("kind").get<std::string>());
      switch (c.kind) {
        case LayerKind::conv:
          c.depth = j.at("depth").get<int>();
          c.filter_h = j.at("filter").at(0).get<int>();
          c.filter_w = j.at("filter").at(1).get<int>();
          break;
        case LayerKind::maxpool:
          c.filter_h = j.at("filter").at(0).get<int>();
          c.filter_w = j.at("filter").at(1).get<int>();
          c.stride_h = j.at("stride").at(0).get<int>();
          c.stride_w = j.at("stride").at(1).get<int>();
          break;
        case LayerKind::fc:
          c.depth = j.at("depth").get<int>();
          break;
        case LayerKind::dropout:
          c.dropout_rate = j.at("rate").get<double>();
          break;
        default:
          break;
      }
      configs.push_back(c);
    }

    Network net(input, configs, hdr.value("seed", std::uint64_t{0}));
    std::vector<double> all(net.param_count());
    read_f32_blob(in, all);
    const std::uint32_t want = read_u32le(in);
    if (crc32_of_f32(all) != want)
      throw std::runtime_error("parameter checksum mismatch: " + path.string());
    std::size_t off = 0;
    for (auto& l : net.layers_) {
      auto p = l->params();
      std::copy(all.begin() + static_cast<std::ptrdiff_t>(off),
                all.begin() + static_cast<std::ptrdiff_t>(off + p.size()),
                p.begin());
      off += p.size();
    }
    return net;
  }

 private:
  std::size_t param_count_const() const {
    std::size_t n = 0;
    for (const auto& l : layers_)
      n += const_cast<Layer&>(*l).params().size();
    return n;
  }

  Shape3 input_shape_{};
  std::uint64_t seed_ = 0;
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace emoanim

#endif  // EMOANIM_NETWORK_HPP_
