// tests/test_synth.cpp

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

#include "emoanim/corpus.hpp"
#include "emoanim/synth.hpp"
#include "support/test_util.hpp"

namespace emoanim {
namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec spec;
  spec.utterances_per_emotion = 2;
  spec.frames_per_utterance = 30;
  spec.bands = 10;
  spec.ka = 5;
  spec.kv = 3;
  spec.param_dim = 4;
  spec.seed = 5;
  return spec;
}

TEST_CASE("synthetic corpora are seed-deterministic", "[synth]") {
  SyntheticCorpus a = generate(tiny_spec());
  SyntheticCorpus b = generate(tiny_spec());
  REQUIRE(a.features.size() == b.features.size());
  REQUIRE(a.features.size() == 14u);  // 2 per emotion
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    CHECK((a.features.sequences->at(i).frames -
           b.features.sequences->at(i).frames)
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((a.features.params[i] - b.features.params[i])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(a.features.ids[0] == "syn_anger_0");
  CHECK(a.features.ids.back() == "syn_surprise_1");

  SyntheticSpec other = tiny_spec();
  other.seed = 6;
  SyntheticCorpus c = generate(other);
  CHECK((a.features.sequences->at(0).frames -
         c.features.sequences->at(0).frames)
            .cwiseAbs()
            .maxCoeff() > 0.0);
}

TEST_CASE("noise-free targets equal the ground-truth map outputs", "[synth]") {
  SyntheticSpec spec = tiny_spec();
  spec.noise = 0.0;
  SyntheticCorpus corpus = generate(spec);

  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    const int e = corpus.features.emotions[i];
    const auto& seq = corpus.features.sequences->at(i);
    const auto& tgt = corpus.features.params[i];
    for (int j = 0; j < seq.size(); ++j) {
      Eigen::VectorXd want = corpus.maps.apply(e, seq.frames.col(j));
      CHECK((tgt.col(j) - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("inputs carry the emotion pattern on top of smooth drift",
          "[synth]") {
  SyntheticSpec spec = tiny_spec();
  spec.frames_per_utterance = 200;
  SyntheticCorpus corpus = generate(spec);

  // projecting the mean input onto the class pattern recovers the shift
  for (std::size_t i = 0; i < corpus.features.size(); ++i) {
    const int e = corpus.features.emotions[i];
    Eigen::VectorXd mean = corpus.features.sequences->at(i).frames.rowwise().mean();
    const double along =
        mean.dot(corpus.maps.pattern[static_cast<std::size_t>(e)]);
    // drift is zero-mean; the projection concentrates near class_separation
    CHECK(along > 0.5 * spec.class_separation);
  }

  // consecutive frames are correlated (drift, not white noise)
  const auto& f = corpus.features.sequences->at(0).frames;
  double step = 0.0, mag = 0.0;
  for (int j = 1; j < f.cols(); ++j) {
    step += (f.col(j) - f.col(j - 1)).squaredNorm();
    mag += f.col(j).squaredNorm();
  }
  CHECK(step < 0.5 * mag);
}

TEST_CASE("ground-truth maps respect the separation margin", "[synth]") {
  SyntheticSpec spec = tiny_spec();
  SyntheticMaps maps = generate_maps(spec);

  // independent Monte-Carlo estimate with fresh probes
  Rng rng(987654);
  std::vector<Eigen::VectorXd> probes;
  for (int k = 0; k < 200; ++k)
    probes.push_back(detail::random_vector(rng, spec.bands, 1.0));

  for (int a = 0; a < kNumEmotions; ++a)
    for (int b = a + 1; b < kNumEmotions; ++b) {
      double acc = 0.0;
      for (const auto& x : probes)
        acc += (maps.apply(a, x) - maps.apply(b, x)).norm();
      const double mean_dist = acc / static_cast<double>(probes.size());
      // allow sampling slack relative to the builder's own probe set
      CHECK(mean_dist > 0.7 * spec.min_margin);
    }
}

TEST_CASE("spec validation rejects degenerate settings", "[synth]") {
  SyntheticSpec spec = tiny_spec();
  spec.ka = 4;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.noise = -0.1;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.smoothness = 1.0;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
  spec = tiny_spec();
  spec.utterances_per_emotion = 0;
  CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("the face template and its motion basis are well-formed",
          "[synth]") {
  ShapeVector face = synthetic_face_template();
  REQUIRE(face.size() == kShapeDim);
  for (int i = 0; i < kShapeDim; ++i) CHECK(std::isfinite(face[i]));
  // the face has real extent on both axes
  CHECK(face.head(kNumLandmarks).maxCoeff() -
            face.head(kNumLandmarks).minCoeff() > 50.0);
  CHECK(face.tail(kNumLandmarks).maxCoeff() -
            face.tail(kNumLandmarks).minCoeff() > 50.0);

  auto modes = synthetic_face_basis();
  for (const auto& m : modes) {
    REQUIRE(m.size() == kShapeDim);
    CHECK_THAT(m.norm(), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  CHECK((modes[0] - modes[1]).norm() > 0.1);
  CHECK((modes[1] - modes[2]).norm() > 0.1);
}

TEST_CASE("dumped corpora read back with exact frame pairing",
          "[synth][dump]") {
  test::TempDir tmp("emoanim_dump");
  SyntheticSpec spec;
  spec.utterances_per_emotion = 1;
  spec.frames_per_utterance = 40;
  spec.seed = 9;

  DumpResult dump = dump_corpus(spec, tmp.path());
  CHECK(dump.records.size() == 7);
  REQUIRE(std::filesystem::exists(dump.manifest));

  auto records = load_manifest(dump.manifest);
  REQUIRE(records.size() == 7);

  FrontendConfig cfg;
  ExtractionResult res = extract_corpus(records, cfg);
  CHECK(res.warnings.empty());
  REQUIRE(res.utterances.size() == 7);
  for (const auto& u : res.utterances) {
    CHECK(u.mfsc.size() == 40);
    CHECK(u.landmarks.cols() == 40);
    CHECK_FALSE(u.flagged);
    CHECK(u.mfsc.frames.allFinite());
    CHECK(u.landmarks.allFinite());
  }

  // the seven carriers differ, so mean spectra must separate by emotion
  const auto& a = res.utterances[0].mfsc.frames;
  const auto& g = res.utterances[6].mfsc.frames;
  CHECK((a.rowwise().mean() - g.rowwise().mean()).norm() > 1.0);
}

TEST_CASE("dumped corpora are byte-identical across runs", "[synth][dump]") {
  test::TempDir tmp("emoanim_dump_repro");
  SyntheticSpec spec;
  spec.utterances_per_emotion = 1;
  spec.frames_per_utterance = 20;

  dump_corpus(spec, tmp.path() / "a");
  dump_corpus(spec, tmp.path() / "b");
  for (const char* rel :
       {"manifest.csv", "wav/syn_anger_0.wav", "landmarks/syn_fear_0.csv"}) {
    CHECK(read_text_file(tmp.path() / "a" / rel) ==
          read_text_file(tmp.path() / "b" / rel));
  }
}

}  // namespace
}  // namespace emoanim
