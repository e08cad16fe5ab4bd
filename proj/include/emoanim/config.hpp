// emoanim/config.hpp

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

// Run configuration. The native format is a small TOML subset ([section],
// key = value, # comments, quoted strings, numbers, booleans); files whose
// content starts with '{' are read as JSON with nested objects flattened to
// dotted keys. Defaults follow the published operating point (Ka=15, Kv=5,
// D=18, dropout 0.5, Adam 1e-3, DERN 200 epochs).

#ifndef EMOANIM_CONFIG_HPP_
#define EMOANIM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "emoanim/io_util.hpp"
#include "emoanim/mfsc.hpp"
#include "emoanim/synth.hpp"

namespace emoanim {

class ConfigMap {
 public:
  static ConfigMap parse_toml(const std::string& text) {
    ConfigMap cm;
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string line = text.substr(
          pos, nl == std::string::npos ? std::string::npos : nl - pos);
      pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
      ++line_no;

      line = trim(line);
      if (line.empty() || line[0] == '#') continue;
      if (line.front() == '[') {
        const auto close = line.find(']');
        if (close == std::string::npos)
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": unterminated section header");
        section = trim(line.substr(1, close - 1));
        if (section.empty())
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": empty section name");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": expected key = value");
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (key.empty())
        throw std::runtime_error("config line " + std::to_string(line_no) +
                                 ": empty key");
      if (!value.empty() && value.front() == '"') {
        const auto close = value.find('"', 1);
        if (close == std::string::npos)
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": unterminated string");
        const std::string rest = trim(value.substr(close + 1));
        if (!rest.empty() && rest[0] != '#')
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": trailing characters after string");
        value = value.substr(1, close - 1);
        cm.set(section, key, value, /*quoted=*/true);
      } else {
        const auto hash = value.find('#');
        if (hash != std::string::npos) value = trim(value.substr(0, hash));
        if (value.empty())
          throw std::runtime_error("config line " + std::to_string(line_no) +
                                   ": empty value");
        cm.set(section, key, value, /*quoted=*/false);
      }
    }
    return cm;
  }

  static ConfigMap parse_json(const std::string& text) {
    ConfigMap cm;
    const nlohmann::json j = nlohmann::json::parse(text);
    flatten(cm, "", j);
    return cm;
  }

  static ConfigMap load(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    const std::string t = trim(text);
    if (!t.empty() && t.front() == '{') return parse_json(text);
    return parse_toml(text);
  }

  bool has(const std::string& dotted) const { return values_.count(dotted) > 0; }

  std::string get_string(const std::string& dotted,
                         const std::string& fallback) const {
    const auto it = values_.find(dotted);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& dotted, double fallback) const {
    const auto it = values_.find(dotted);
    if (it == values_.end()) return fallback;
    try {
      return parse_double(it->second, dotted);
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + dotted + "': '" + it->second +
                               "' is not a number");
    }
  }

  long long get_int(const std::string& dotted, long long fallback) const {
    const auto it = values_.find(dotted);
    if (it == values_.end()) return fallback;
    try {
      return parse_int(it->second, dotted);
    } catch (const std::exception&) {
      throw std::runtime_error("config key '" + dotted + "': '" + it->second +
                               "' is not an integer");
    }
  }

  bool get_bool(const std::string& dotted, bool fallback) const {
    const auto it = values_.find(dotted);
    if (it == values_.end()) return fallback;
    if (it->second == "true") return true;
    if (it->second == "false") return false;
    throw std::runtime_error("config key '" + dotted + "': '" + it->second +
                             "' is not a boolean");
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  void set(const std::string& section, const std::string& key,
           const std::string& value, bool) {
    const std::string dotted = section.empty() ? key : section + "." + key;
    values_[dotted] = value;
  }

  static void flatten(ConfigMap& cm, const std::string& prefix,
                      const nlohmann::json& j) {
    if (j.is_object()) {
      for (const auto& [k, v] : j.items())
        flatten(cm, prefix.empty() ? k : prefix + "." + k, v);
      return;
    }
    if (j.is_string())
      cm.values_[prefix] = j.get<std::string>();
    else
      cm.values_[prefix] = j.dump();
  }

  std::map<std::string, std::string> values_;
};

struct TrainSection {
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  double width_scale = 1.0;
};

struct RunConfig {
  FrontendConfig frontend;
  int ka = 15;
  int kv = 5;
  int pca_dim = 18;

  TrainSection dern{.epochs = 200};
  TrainSection dsrn{.epochs = 40};

  std::string manifest;  // corpus manifest path (possibly relative)
  int n_folds = 5;
  double test_frac = 0.10;
  std::string speaker_holdout;

  SyntheticSpec synth;

  std::uint64_t seed = 1;
  int fold = 0;

  void validate() const {
    frontend.validate();
    if (ka < 1 || ka % 2 == 0 || kv < 1 || kv % 2 == 0)
      throw std::invalid_argument("config: Ka and Kv must be odd");
    if (pca_dim < 1 || pca_dim > kShapeDim)
      throw std::invalid_argument("config: pca_dim out of range");
    if (fold < 0 || fold >= n_folds)
      throw std::invalid_argument("config: fold index out of range");
  }

  static RunConfig from_map(const ConfigMap& cm,
                            const std::filesystem::path& base_dir = {}) {
    RunConfig c;
    c.frontend.analysis_rate =
        static_cast<int>(cm.get_int("frontend.analysis_rate", 16000));
    c.frontend.window_ms = cm.get_double("frontend.window_ms", 25.0);
    c.frontend.hop_ms = cm.get_double("frontend.hop_ms", 10.0);
    c.frontend.preemphasis = cm.get_double("frontend.preemphasis", 0.97);
    c.frontend.fft_size = static_cast<int>(cm.get_int("frontend.fft_size", 512));
    c.frontend.mel_bands = static_cast<int>(cm.get_int("frontend.mel_bands", 40));
    c.frontend.mel_low_hz = cm.get_double("frontend.mel_low_hz", 0.0);
    c.frontend.mel_high_hz = cm.get_double("frontend.mel_high_hz", 0.0);
    c.frontend.log_floor = cm.get_double("frontend.log_floor", 1e-10);

    c.ka = static_cast<int>(cm.get_int("shape.ka", 15));
    c.kv = static_cast<int>(cm.get_int("shape.kv", 5));
    c.pca_dim = static_cast<int>(cm.get_int("shape.pca_dim", 18));

    auto train = [&](const std::string& sec, TrainSection def) {
      TrainSection t = def;
      t.epochs = static_cast<int>(cm.get_int(sec + ".epochs", def.epochs));
      t.batch_size = static_cast<int>(cm.get_int(sec + ".batch", def.batch_size));
      t.lr = cm.get_double(sec + ".lr", def.lr);
      t.width_scale = cm.get_double(sec + ".width_scale", def.width_scale);
      return t;
    };
    c.dern = train("dern", TrainSection{.epochs = 200});
    c.dsrn = train("dsrn", TrainSection{.epochs = 40});

    c.manifest = cm.get_string("corpus.manifest", "");
    if (!c.manifest.empty() && !base_dir.empty()) {
      std::filesystem::path mp(c.manifest);
      if (!mp.is_absolute()) c.manifest = (base_dir / mp).string();
    }
    c.n_folds = static_cast<int>(cm.get_int("corpus.folds", 5));
    c.test_frac = cm.get_double("corpus.test_frac", 0.10);
    c.speaker_holdout = cm.get_string("corpus.speaker_holdout", "");

    c.synth.utterances_per_emotion =
        static_cast<int>(cm.get_int("synth.utterances_per_emotion", 12));
    c.synth.frames_per_utterance =
        static_cast<int>(cm.get_int("synth.frames_per_utterance", 250));
    c.synth.noise = cm.get_double("synth.noise", 0.02);
    c.synth.min_margin = cm.get_double("synth.min_margin", 0.75);
    c.synth.class_separation = cm.get_double("synth.class_separation", 1.5);
    c.synth.smoothness = cm.get_double("synth.smoothness", 0.9);

    c.seed = static_cast<std::uint64_t>(cm.get_int("run.seed", 1));
    c.fold = static_cast<int>(cm.get_int("run.fold", 0));

    // derived synth dimensions follow the frontend/shape sections
    c.synth.bands = c.frontend.mel_bands;
    c.synth.ka = c.ka;
    c.synth.kv = c.kv;
    c.synth.param_dim = c.pca_dim;
    c.synth.seed = derive_seed(c.seed, "synth");
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    RunConfig c = from_map(ConfigMap::load(path), path.parent_path());
    c.validate();
    return c;
  }
};

}  // namespace emoanim

#endif  // EMOANIM_CONFIG_HPP_
