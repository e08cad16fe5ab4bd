// emoanim command line front end.

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

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"

#include "emoanim/config.hpp"
#include "emoanim/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "runs/default";
  long long seed = -1;  // -1 = keep the config's seed
  int fold = -1;
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "TOML or JSON config file");
  cmd->add_option("--out-dir", args->out_dir, "run directory for artifacts")
      ->capture_default_str();
  cmd->add_option("--seed", args->seed, "override the config seed");
  cmd->add_option("--fold", args->fold, "override the config fold index");
}

emoanim::RunConfig load_config(const CommonArgs& args) {
  emoanim::RunConfig cfg = args.config_path.empty()
                               ? emoanim::RunConfig{}
                               : emoanim::RunConfig::load(args.config_path);
  if (args.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(args.seed);
    // re-derive the synthetic seed from the effective run seed
    cfg.synth.seed = emoanim::derive_seed(cfg.seed, "synth");
  }
  if (args.fold >= 0) cfg.fold = args.fold;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emotion-dependent speech-driven facial shape animation"};
  app.require_subcommand(1);

  CommonArgs prepare_args, dern_args, dsrn_args, eval_args, animate_args,
      synth_args;
  std::string dsrn_emotion;
  bool all_combined = false;
  std::string wav_path;
  bool render_svg = false;

  CLI::App* prepare =
      app.add_subcommand("prepare", "extract features, fit statistics, plan folds");
  add_common(prepare, &prepare_args);

  CLI::App* train_dern =
      app.add_subcommand("train-dern", "train the emotion classifier");
  add_common(train_dern, &dern_args);

  CLI::App* train_dsrn =
      app.add_subcommand("train-dsrn", "train shape regressors");
  add_common(train_dsrn, &dsrn_args);
  train_dsrn->add_option("--emotion", dsrn_emotion,
                         "train only this emotion (name or index)");
  train_dsrn->add_flag("--all-combined", all_combined,
                       "train the single pooled baseline instead");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "test-set report: accuracy + 3-way MSE");
  add_common(evaluate, &eval_args);

  CLI::App* animate = app.add_subcommand("animate", "animate a WAV file");
  add_common(animate, &animate_args);
  animate->add_option("wav", wav_path, "input WAV file")->required();
  animate->add_flag("--render-svg", render_svg, "also write SVG frames");

  CLI::App* synth =
      app.add_subcommand("synth", "write the synthetic on-disk corpus");
  add_common(synth, &synth_args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prepare->parsed()) {
      emoanim::cmd_prepare(load_config(prepare_args),
                           {prepare_args.out_dir});
    } else if (train_dern->parsed()) {
      emoanim::cmd_train_dern(load_config(dern_args), {dern_args.out_dir});
    } else if (train_dsrn->parsed()) {
      int emotion = -1;
      if (!dsrn_emotion.empty()) {
        try {
          emotion = std::stoi(dsrn_emotion);
        } catch (const std::exception&) {
          emotion = emoanim::emotion_index(dsrn_emotion);
        }
      }
      if (emotion >= 0 && all_combined)
        throw std::runtime_error(
            "--emotion and --all-combined are mutually exclusive");
      emoanim::cmd_train_dsrn(load_config(dsrn_args), {dsrn_args.out_dir},
                              emotion, all_combined);
    } else if (evaluate->parsed()) {
      emoanim::cmd_evaluate(load_config(eval_args), {eval_args.out_dir});
    } else if (animate->parsed()) {
      emoanim::cmd_animate(load_config(animate_args), {animate_args.out_dir},
                           wav_path, render_svg);
    } else if (synth->parsed()) {
      emoanim::cmd_synth(load_config(synth_args), {synth_args.out_dir});
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
