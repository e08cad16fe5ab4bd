// tests/test_pipeline.cpp

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

#include <algorithm>
#include <cmath>

#include "emoanim/pipeline.hpp"
#include "emoanim/svg.hpp"
#include "support/test_util.hpp"

namespace emoanim {
namespace {

// miniature end-to-end setup shared by the tests below
RunConfig tiny_config() {
  RunConfig c = RunConfig::from_map(ConfigMap{});
  c.ka = 7;
  c.kv = 3;
  c.pca_dim = 3;
  c.n_folds = 2;
  c.fold = 0;
  c.seed = 12;
  c.dern.epochs = 1;
  c.dern.width_scale = 0.05;
  c.dsrn.epochs = 1;
  c.dsrn.width_scale = 0.05;
  c.synth.utterances_per_emotion = 3;
  c.synth.frames_per_utterance = 30;
  c.synth.bands = c.frontend.mel_bands;
  c.synth.ka = c.ka;
  c.synth.kv = c.kv;
  c.synth.param_dim = c.pca_dim;
  c.synth.seed = derive_seed(c.seed, "synth");
  c.validate();
  return c;
}

TEST_CASE("the command pipeline runs end to end on a tiny corpus",
          "[pipeline]") {
  test::TempDir tmp("emoanim_pipeline_e2e");
  RunConfig cfg = tiny_config();
  RunPaths paths{tmp.path() / "run"};

  // synth writes the corpus, prepare builds features and the fold plan
  const auto manifest = cmd_synth(cfg, paths);
  REQUIRE(std::filesystem::exists(manifest));
  cfg.manifest = manifest.string();

  CHECK_THROWS_WITH(cmd_train_dern(cfg, paths),
                    Catch::Matchers::ContainsSubstring("prepare"));

  cmd_prepare(cfg, paths);
  REQUIRE(std::filesystem::exists(paths.corpus_cache()));
  REQUIRE(std::filesystem::exists(paths.fold_plan()));
  REQUIRE(std::filesystem::exists(paths.prepare_meta()));

  const FoldPlan plan = FoldPlan::load(paths.fold_plan());
  CHECK(plan.test.size() == 2);  // lround(21 * 0.10)
  REQUIRE(plan.folds.size() == 2);
  CHECK(plan.folds[0].train.size() + plan.folds[0].val.size() == 19);

  const CorpusFeatures cf = load_corpus_features(paths.corpus_cache());
  CHECK(cf.size() == 21);
  CHECK(cf.shape_model.pca.dim() == 3);
  // the dumped faces move along three basis modes, so 3 components carry
  // nearly all the variance
  CHECK(cf.shape_model.pca.variance_covered > 0.95);

  // train everything at minimal size
  cmd_train_dern(cfg, paths);
  REQUIRE(std::filesystem::exists(paths.dern_model()));
  REQUIRE(std::filesystem::exists(paths.logs_dir() / "dern_loss.csv"));

  cmd_train_dsrn(cfg, paths, -1, /*all_combined=*/false);  // all seven
  for (int e = 0; e < kNumEmotions; ++e)
    REQUIRE(std::filesystem::exists(paths.dsrn_model(e)));
  cmd_train_dsrn(cfg, paths, -1, /*all_combined=*/true);
  REQUIRE(std::filesystem::exists(paths.combined_model()));

  // loss logs are csv with one row per epoch
  const std::string log =
      read_text_file(paths.logs_dir() / "dsrn_anger_loss.csv");
  CHECK(log.rfind("epoch,train_loss,val_loss", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 2);  // header + 1 epoch

  // evaluation produces the three-condition report
  nlohmann::json rep = cmd_evaluate(cfg, paths);
  REQUIRE(std::filesystem::exists(paths.report()));
  CHECK(rep.at("test_utterances").get<int>() == 2);
  for (const char* cond : {"dern_dsrn", "oracle_dsrn", "all_combined"}) {
    const auto& m = rep.at("mse").at(cond);
    for (const char* conv : {"per_coefficient", "per_frame", "per_window"}) {
      const double v = m.at(conv).get<double>();
      CHECK(std::isfinite(v));
      CHECK(v >= 0.0);
    }
    // summing over the D coefficients scales per-coefficient MSE up by D
    CHECK_THAT(m.at("per_frame").get<double>(),
               Catch::Matchers::WithinRel(
                   m.at("per_coefficient").get<double>() * 3.0, 1e-9));
  }
  const double acc = rep.at("dern_utterance_accuracy_overall").get<double>();
  CHECK(acc >= 0.0);
  CHECK(acc <= 1.0);

  // animation emits one landmark frame per acoustic frame
  const auto wav = tmp.path() / "run" / "corpus" / "wav" / "syn_anger_0.wav";
  REQUIRE(std::filesystem::exists(wav));
  const auto out_dir = cmd_animate(cfg, paths, wav, /*render_svg=*/true);

  Eigen::MatrixXd track = load_landmark_track(out_dir / "landmarks.csv");
  CHECK(track.rows() == kShapeDim);
  CHECK(track.cols() == 30);  // 0.3 s of audio at 100 Hz
  CHECK(track.allFinite());

  const nlohmann::json meta =
      nlohmann::json::parse(read_text_file(out_dir / "metadata.json"));
  CHECK(meta.at("frames").get<int>() == 30);
  CHECK(meta.at("frame_rate").get<double>() == 100.0);
  const auto& dec = meta.at("decision");
  CHECK(emotion_index(dec.at("e_star").get<std::string>()) >= 0);
  CHECK(dec.at("p_star").get<double>() >= 0.5);
  CHECK(dec.at("p_star").get<double>() <= 1.0);
  double hist_sum = 0.0;
  for (double h : dec.at("histogram")) hist_sum += h;
  CHECK_THAT(hist_sum, Catch::Matchers::WithinAbs(1.0, 1e-9));

  CHECK(std::filesystem::exists(out_dir / "params.csv"));
  CHECK(std::filesystem::exists(out_dir / "svg" / "frame_00000.svg"));
  CHECK(std::filesystem::exists(out_dir / "svg" / "frame_00029.svg"));
}

TEST_CASE("prepare is deterministic across reruns", "[pipeline]") {
  test::TempDir tmp("emoanim_pipeline_repro");
  RunConfig cfg = tiny_config();

  RunPaths a{tmp.path() / "a"}, b{tmp.path() / "b"};
  cfg.manifest = cmd_synth(cfg, a).string();
  cmd_prepare(cfg, a);
  cfg.manifest = cmd_synth(cfg, b).string();
  cmd_prepare(cfg, b);

  CHECK(read_text_file(a.corpus_cache()) == read_text_file(b.corpus_cache()));
  CHECK(read_text_file(a.fold_plan()) == read_text_file(b.fold_plan()));
}

TEST_CASE("svg rendering draws the four face groups", "[pipeline][svg]") {
  test::TempDir tmp("emoanim_svg");
  ShapeVector face = synthetic_face_template();
  Eigen::MatrixXd track(kShapeDim, 2);
  track.col(0) = face;
  track.col(1) = face;

  write_svg_frames(tmp.path(), track);
  const std::string svg = read_text_file(tmp.path() / "frame_00000.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);  // jaw and nose
  CHECK(svg.find("polygon") != std::string::npos);   // lips close
  CHECK(std::filesystem::exists(tmp.path() / "frame_00001.svg"));
}

}  // namespace
}  // namespace emoanim
