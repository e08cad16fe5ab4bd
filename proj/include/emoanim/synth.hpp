// emoanim/synth.hpp

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

// Deterministic synthetic corpus with emotion-conditioned acoustic-to-shape
// mappings. Two layers:
//   * generate(): feature-level corpus (inputs + regression targets drawn
//     from seven margin-separated ground-truth maps) used by the benchmark
//     that tests the per-emotion-beats-combined claim.
//   * dump_corpus(): an on-disk corpus (WAV + 25 Hz landmark CSVs +
//     manifest) in the same layout the real pipeline ingests, for
//     end-to-end runs without any external data.

#ifndef EMOANIM_SYNTH_HPP_
#define EMOANIM_SYNTH_HPP_

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "emoanim/corpus.hpp"
#include "emoanim/emotion.hpp"
#include "emoanim/regress.hpp"
#include "emoanim/rng.hpp"
#include "emoanim/trainer.hpp"
#include "emoanim/wav.hpp"

namespace emoanim {

struct SyntheticSpec {
  int utterances_per_emotion = 12;
  int frames_per_utterance = 250;  // at 100 Hz, so 2.5 s each
  int bands = 40;
  int ka = 15;
  int kv = 5;
  int param_dim = 18;
  double noise = 0.02;            // target observation noise (std dev)
  double min_margin = 0.75;       // mean pairwise map-output distance
  double class_separation = 1.5;  // per-emotion input pattern strength
  double smoothness = 0.9;        // AR(1) coefficient of the input drift
  std::uint64_t seed = 1;

  void validate() const {
    if (utterances_per_emotion < 1 || frames_per_utterance < 1)
      throw std::invalid_argument("synthetic spec: empty corpus");
    if (bands < 1 || param_dim < 1)
      throw std::invalid_argument("synthetic spec: bad dimensions");
    if (ka < 1 || ka % 2 == 0 || kv < 1 || kv % 2 == 0)
      throw std::invalid_argument("synthetic spec: Ka and Kv must be odd");
    if (noise < 0.0) throw std::invalid_argument("synthetic spec: noise < 0");
    if (smoothness < 0.0 || smoothness >= 1.0)
      throw std::invalid_argument("synthetic spec: smoothness must be in [0,1)");
  }
};

// Ground truth: g_e(x) = A_e * tanh(B x) + c_e with a shared mixing matrix B
// and per-emotion (A_e, c_e), plus the additive input pattern mu_e that
// makes the emotion recoverable from the inputs themselves.
struct SyntheticMaps {
  Eigen::MatrixXd mix;  // param_dim x bands, shared
  std::array<Eigen::MatrixXd, kNumEmotions> gain;
  std::array<Eigen::VectorXd, kNumEmotions> offset;
  std::array<Eigen::VectorXd, kNumEmotions> pattern;  // unit vectors, bands

  Eigen::VectorXd apply(int e, const Eigen::VectorXd& x) const {
    return gain[static_cast<std::size_t>(e)] *
               (mix * x).array().tanh().matrix() +
           offset[static_cast<std::size_t>(e)];
  }
};

namespace detail {

inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols,
                                     double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = scale * rng.normal();
  return m;
}

inline Eigen::VectorXd random_vector(Rng& rng, int n, double scale) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * rng.normal();
  return v;
}

inline void draw_map(SyntheticMaps& maps, const SyntheticSpec& spec, int e,
                     int attempt) {
  Rng rng(derive_seed(spec.seed, "map-" + std::to_string(e) + "-" +
                                     std::to_string(attempt)));
  const double a_scale = 1.0 / std::sqrt(static_cast<double>(spec.param_dim));
  maps.gain[static_cast<std::size_t>(e)] =
      random_matrix(rng, spec.param_dim, spec.param_dim, a_scale);
  maps.offset[static_cast<std::size_t>(e)] =
      random_vector(rng, spec.param_dim, 0.5);
}

}  // namespace detail

// Draws the seven maps and enforces pairwise separation with Monte-Carlo
// probes; violating maps are redrawn deterministically.
inline SyntheticMaps generate_maps(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticMaps maps;
  {
    Rng rng(derive_seed(spec.seed, "mix"));
    maps.mix = detail::random_matrix(
        rng, spec.param_dim, spec.bands,
        1.0 / std::sqrt(static_cast<double>(spec.bands)));
  }
  for (int e = 0; e < kNumEmotions; ++e) {
    Rng rng(derive_seed(spec.seed, "pattern-" + std::to_string(e)));
    Eigen::VectorXd p = detail::random_vector(rng, spec.bands, 1.0);
    maps.pattern[static_cast<std::size_t>(e)] = p / p.norm();
  }

  std::array<int, kNumEmotions> attempt{};
  for (int e = 0; e < kNumEmotions; ++e) detail::draw_map(maps, spec, e, 0);

  // fixed probe set, independent of the redraw history
  constexpr int kProbes = 100;
  Rng probe_rng(derive_seed(spec.seed, "probes"));
  std::vector<Eigen::VectorXd> probes;
  for (int k = 0; k < kProbes; ++k)
    probes.push_back(detail::random_vector(probe_rng, spec.bands, 1.0));

  auto pair_distance = [&](int a, int b) {
    double acc = 0.0;
    for (const auto& x : probes)
      acc += (maps.apply(a, x) - maps.apply(b, x)).norm();
    return acc / kProbes;
  };

  for (int round = 0; round < 50; ++round) {
    int worst_b = -1;
    double worst = spec.min_margin;
    for (int a = 0; a < kNumEmotions; ++a)
      for (int b = a + 1; b < kNumEmotions; ++b) {
        const double d = pair_distance(a, b);
        if (d < worst) {
          worst = d;
          worst_b = b;
        }
      }
    if (worst_b < 0) return maps;  // all pairs clear the margin
    detail::draw_map(maps, spec, worst_b,
                     ++attempt[static_cast<std::size_t>(worst_b)]);
  }
  throw std::runtime_error(
      "generate_maps: could not separate the ground-truth maps; lower "
      "min_margin or change the seed");
}

struct SyntheticCorpus {
  CorpusFeatures features;  // sequences = inputs, params = targets
  SyntheticMaps maps;
  SyntheticSpec spec;
};

// Feature-level corpus. Inputs are smooth AR(1) band trajectories shifted by
// the emotion pattern; targets are the per-frame ground-truth map outputs
// plus observation noise.
inline SyntheticCorpus generate(const SyntheticSpec& spec) {
  spec.validate();
  SyntheticCorpus corpus;
  corpus.spec = spec;
  corpus.maps = generate_maps(spec);

  CorpusFeatures& cf = corpus.features;
  cf.ka = spec.ka;
  cf.kv = spec.kv;
  cf.sequences = std::make_shared<std::vector<SpectralSequence>>();

  const double rho = spec.smoothness;
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int e = 0; e < kNumEmotions; ++e) {
    const Eigen::VectorXd shift =
        spec.class_separation * corpus.maps.pattern[static_cast<std::size_t>(e)];
    for (int u = 0; u < spec.utterances_per_emotion; ++u) {
      Rng rng(derive_seed(spec.seed, "utt-" + std::to_string(e) + "-" +
                                         std::to_string(u)));
      SpectralSequence seq;
      seq.frames.resize(spec.bands, spec.frames_per_utterance);
      Eigen::MatrixXd targets(spec.param_dim, spec.frames_per_utterance);
      Eigen::VectorXd drift = detail::random_vector(rng, spec.bands, 1.0);
      for (int j = 0; j < spec.frames_per_utterance; ++j) {
        if (j > 0)
          drift = rho * drift +
                  innov * detail::random_vector(rng, spec.bands, 1.0);
        const Eigen::VectorXd x = drift + shift;
        seq.frames.col(j) = x;
        targets.col(j) =
            corpus.maps.apply(e, x) +
            detail::random_vector(rng, spec.param_dim, spec.noise);
      }
      cf.sequences->push_back(std::move(seq));
      cf.ids.push_back("syn_" + std::string(emotion_name(e)) + "_" +
                       std::to_string(u));
      cf.speakers.push_back("synth");
      cf.emotions.push_back(e);
      cf.params.push_back(std::move(targets));
    }
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// The claim benchmark: per-emotion DSRNs vs one equal-capacity combined
// model, plus the three-way cascade comparison on held-out utterances.

struct BenchOptions {
  double width_scale = 0.125;
  int dern_epochs = 6;
  int dsrn_epochs = 8;
  int batch_size = 64;
  std::uint64_t train_seed = 1;
  bool verbose = false;
};

struct BenchReport {
  // validation, window-convention MSE (the training objective)
  double combined_val_mse = 0.0;
  std::array<double, kNumEmotions> per_emotion_val_mse{};
  double per_emotion_mean_val_mse = 0.0;

  // held-out test utterances
  double dern_frame_accuracy = 0.0;
  double oracle_test_mse = 0.0;     // decision = true emotion
  double predicted_test_mse = 0.0;  // decision = DERN top-two
  double combined_test_mse = 0.0;   // single pooled model
};

namespace detail {

inline double window_mse_for_utterance(DsrnBank& bank, const CorpusFeatures& cf,
                                       int idx, const UtteranceDecision& d) {
  const SpectralSequence& seq = cf.sequences->at(static_cast<std::size_t>(idx));
  const Eigen::MatrixXd& par = cf.params[static_cast<std::size_t>(idx)];
  const int n = static_cast<int>(par.cols());
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, cf.ka));
    const Eigen::VectorXd est = fuse_estimate(bank, img, d);
    const Eigen::VectorXd want = shape_window(par, j, cf.kv);
    acc += (est - want).squaredNorm() / static_cast<double>(est.size());
  }
  return acc / n;
}

// Same measurement for a single (emotion-independent) model.
inline double window_mse_single(Network& net, const CorpusFeatures& cf,
                                int idx) {
  const SpectralSequence& seq = cf.sequences->at(static_cast<std::size_t>(idx));
  const Eigen::MatrixXd& par = cf.params[static_cast<std::size_t>(idx)];
  const int n = static_cast<int>(par.cols());
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, cf.ka));
    const Tensor& out = net.forward(img, /*train=*/false);
    const Eigen::VectorXd want = shape_window(par, j, cf.kv);
    double e2 = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double e = out.data[i] - want[static_cast<Eigen::Index>(i)];
      e2 += e * e;
    }
    acc += e2 / static_cast<double>(out.size());
  }
  return acc / n;
}

}  // namespace detail

// Trains DERN + 7 per-emotion DSRNs + 1 combined DSRN on fold 0 of a
// stratified split, then reports the validation comparison and the
// three-condition test MSE. Everything is derived from (corpus seed,
// train_seed), so a report is reproducible.
inline BenchReport run_benchmark(const SyntheticCorpus& corpus,
                                 const BenchOptions& opt = {}) {
  const CorpusFeatures& cf = corpus.features;
  const FoldPlan plan = make_folds(cf.ids, cf.emotions, cf.speakers,
                                   derive_seed(corpus.spec.seed, "bench-folds"));
  const Fold& fold = plan.folds.at(0);
  const int out_dim = corpus.spec.param_dim * corpus.spec.kv;

  auto log = [&](const std::string& s) {
    if (opt.verbose) std::fprintf(stderr, "[bench] %s\n", s.c_str());
  };

  const Shape3 in_shape{corpus.spec.bands, corpus.spec.ka, 1};

  // --- DERN -------------------------------------------------------------
  ExampleSet dern_train = dern_examples(cf, fold.train);
  ExampleSet dern_val = dern_examples(cf, fold.val);
  Network dern(in_shape, dern_layers(kNumEmotions, opt.width_scale),
               derive_seed(opt.train_seed, "dern-init"));
  {
    TrainOptions to;
    to.epochs = opt.dern_epochs;
    to.batch_size = opt.batch_size;
    to.seed = derive_seed(opt.train_seed, "dern-train");
    to.objective = Objective::cross_entropy;
    train_network(dern, dern_train, &dern_val, to);
    log("dern val accuracy " +
        std::to_string(evaluate_accuracy(dern, dern_val)));
  }

  // --- DSRNs ------------------------------------------------------------
  auto train_dsrn = [&](int emotion, const std::string& tag) {
    ExampleSet tr = dsrn_examples(cf, fold.train, emotion);
    ExampleSet va = dsrn_examples(cf, fold.val, emotion);
    Network net(in_shape, dsrn_layers(out_dim, opt.width_scale),
                derive_seed(opt.train_seed, tag + "-init"));
    TrainOptions to;
    to.epochs = opt.dsrn_epochs;
    to.batch_size = opt.batch_size;
    to.seed = derive_seed(opt.train_seed, tag + "-train");
    to.objective = Objective::mse;
    train_network(net, tr, &va, to);
    const double val = evaluate_loss(net, va, Objective::mse);
    log(tag + " val mse " + std::to_string(val));
    return std::make_pair(std::move(net), val);
  };

  BenchReport rep;
  DsrnBank bank;
  bank.kv = corpus.spec.kv;
  bank.param_dim = corpus.spec.param_dim;
  double mean_val = 0.0;
  for (int e = 0; e < kNumEmotions; ++e) {
    auto [net, val] = train_dsrn(e, std::string("dsrn-") + emotion_name(e));
    bank.models[static_cast<std::size_t>(e)] = std::move(net);
    rep.per_emotion_val_mse[static_cast<std::size_t>(e)] = val;
    mean_val += val;
  }
  rep.per_emotion_mean_val_mse = mean_val / kNumEmotions;

  auto [combined, combined_val] = train_dsrn(-1, "dsrn-combined");
  rep.combined_val_mse = combined_val;

  // --- cascade on the held-out test utterances --------------------------
  const std::vector<int> test_idx = cf.indices_of(plan.test);
  std::size_t frames_total = 0, frames_hit = 0;
  double oracle_acc = 0.0, predicted_acc = 0.0, combined_acc = 0.0;
  for (int idx : test_idx) {
    ExampleSet frames = dern_examples(cf, std::vector<std::string>{
                                              cf.ids[static_cast<std::size_t>(idx)]});
    const std::vector<int> labels = predict_labels(dern, frames);
    for (int l : labels)
      if (l == cf.emotions[static_cast<std::size_t>(idx)]) ++frames_hit;
    frames_total += labels.size();

    const UtteranceDecision predicted = decide_from_frames(labels);
    UtteranceDecision oracle;
    oracle.e_star = cf.emotions[static_cast<std::size_t>(idx)];
    oracle.e_star2 = oracle.e_star == 0 ? 1 : 0;
    oracle.p_star = 1.0;
    oracle.p_star2 = 0.0;

    oracle_acc += detail::window_mse_for_utterance(bank, cf, idx, oracle);
    predicted_acc += detail::window_mse_for_utterance(bank, cf, idx, predicted);
    combined_acc += detail::window_mse_single(combined, cf, idx);
  }
  rep.dern_frame_accuracy =
      static_cast<double>(frames_hit) / static_cast<double>(frames_total);
  const double nt = static_cast<double>(test_idx.size());
  rep.oracle_test_mse = oracle_acc / nt;
  rep.predicted_test_mse = predicted_acc / nt;
  rep.combined_test_mse = combined_acc / nt;
  return rep;
}

// ---------------------------------------------------------------------------
// On-disk synthetic corpus: a stylized 36-landmark face whose mouth moves
// with the audio envelope, spoken as emotion-coded sinusoid mixtures.

// Landmark layout (x0..x35 then y0..y35, y down):
//   0-11  jaw arc, left ear to right ear through the chin
//   12-15 nose bridge and base
//   16-27 outer lip ellipse (12 points, starting at the left corner)
//   28-35 inner lip ellipse (8 points)
inline ShapeVector synthetic_face_template() {
  constexpr double pi = std::numbers::pi;
  ShapeVector s(kShapeDim);
  auto set = [&](int i, double x, double y) {
    s[i] = x;
    s[kNumLandmarks + i] = y;
  };
  for (int i = 0; i < 12; ++i) {
    const double phi = pi * i / 11.0;
    set(i, -85.0 * std::cos(phi), -10.0 + 95.0 * std::sin(phi));
  }
  set(12, 0.0, -25.0);
  set(13, 0.0, -5.0);
  set(14, -12.0, 10.0);
  set(15, 12.0, 10.0);
  for (int k = 0; k < 12; ++k) {
    const double a = pi + 2.0 * pi * k / 12.0;
    set(16 + k, 32.0 * std::cos(a), 45.0 + 14.0 * std::sin(a));
  }
  for (int k = 0; k < 8; ++k) {
    const double a = pi + 2.0 * pi * k / 8.0;
    set(28 + k, 22.0 * std::cos(a), 46.0 + 6.0 * std::sin(a));
  }
  return s;
}

// Three non-rigid motion modes (unit norm): mouth opening, mouth widening,
// and a small nose/jaw wiggle that adds independent shape variance.
inline std::array<ShapeVector, 3> synthetic_face_basis() {
  constexpr double pi = std::numbers::pi;
  std::array<ShapeVector, 3> modes;
  for (auto& m : modes) m = ShapeVector::Zero(kShapeDim);
  auto add = [&](ShapeVector& m, int i, double dx, double dy) {
    m[i] += dx;
    m[kNumLandmarks + i] += dy;
  };

  ShapeVector& open = modes[0];
  for (int i = 0; i < 12; ++i) {
    const double phi = pi * i / 11.0;
    add(open, i, 0.0, 12.0 * std::pow(std::sin(phi), 3.0));
  }
  for (int k = 0; k < 12; ++k) {
    const double a = pi + 2.0 * pi * k / 12.0;
    add(open, 16 + k, 0.0, 8.0 * std::max(0.0, std::sin(a)));
  }
  for (int k = 0; k < 8; ++k) {
    const double a = pi + 2.0 * pi * k / 8.0;
    add(open, 28 + k, 0.0,
        10.0 * std::max(0.0, std::sin(a)) - 3.0 * std::max(0.0, -std::sin(a)));
  }

  ShapeVector& wide = modes[1];
  for (int k = 0; k < 12; ++k) {
    const double a = pi + 2.0 * pi * k / 12.0;
    add(wide, 16 + k, 6.0 * std::cos(a), 0.0);
  }
  for (int k = 0; k < 8; ++k) {
    const double a = pi + 2.0 * pi * k / 8.0;
    add(wide, 28 + k, 4.0 * std::cos(a), 0.0);
  }

  ShapeVector& wiggle = modes[2];
  add(wiggle, 12, 0.0, -2.0);
  add(wiggle, 13, 0.0, 2.0);
  add(wiggle, 14, -2.0, 1.0);
  add(wiggle, 15, 2.0, 1.0);
  add(wiggle, 0, 1.5, 0.0);
  add(wiggle, 11, -1.5, 0.0);

  for (auto& m : modes) m /= m.norm();
  return modes;
}

struct DumpResult {
  std::filesystem::path manifest;
  std::vector<UtteranceRecord> records;
};

// Writes WAVs, 25 Hz landmark CSVs and a manifest under dir. The mouth-open
// coefficient follows the same envelope that amplitude-modulates the audio,
// so the dumped corpus carries a real audio-to-shape dependency; carrier
// frequencies and envelope rates are emotion-coded so the emotion is
// audible to a spectral classifier.
inline DumpResult dump_corpus(const SyntheticSpec& spec,
                              const std::filesystem::path& dir,
                              int sample_rate = 16000) {
  spec.validate();
  constexpr double pi = std::numbers::pi;
  namespace fs = std::filesystem;
  fs::create_directories(dir / "wav");
  fs::create_directories(dir / "landmarks");

  const ShapeVector face = synthetic_face_template();
  const auto modes = synthetic_face_basis();

  DumpResult out;
  const int n100 = spec.frames_per_utterance;
  if (n100 < 16)
    throw std::invalid_argument("dump_corpus: need >= 16 frames per utterance");
  // smallest 25 Hz length whose 4x upsample covers n100 frames
  const int n25 = (n100 + 2) / 4 + 1;
  const int samples = n100 * sample_rate / 100;

  for (int e = 0; e < kNumEmotions; ++e) {
    const double f1 = 220.0 + 60.0 * e;
    const double f2 = 480.0 + 90.0 * e;
    const double env_rate = 1.3 + 0.15 * e;
    for (int u = 0; u < spec.utterances_per_emotion; ++u) {
      Rng rng(derive_seed(spec.seed, "dump-" + std::to_string(e) + "-" +
                                         std::to_string(u)));
      const double ph_env = 2.0 * pi * rng.uniform();
      const double ph1 = 2.0 * pi * rng.uniform();
      const double ph2 = 2.0 * pi * rng.uniform();
      const double ph_w = 2.0 * pi * rng.uniform();

      auto envelope = [&](double t) {
        return 0.6 + 0.4 * std::sin(2.0 * pi * env_rate * t + ph_env);
      };

      AudioClip clip;
      clip.sample_rate = sample_rate;
      clip.samples.resize(static_cast<std::size_t>(samples));
      for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / sample_rate;
        double v = envelope(t) * (0.6 * std::sin(2.0 * pi * f1 * t + ph1) +
                                  0.4 * std::sin(2.0 * pi * f2 * t + ph2));
        v += 0.01 * rng.normal();
        clip.samples[static_cast<std::size_t>(i)] = 0.5 * v;
      }

      Eigen::MatrixXd lm(kShapeDim, n25);
      for (int k = 0; k < n25; ++k) {
        const double t = static_cast<double>(k) / kLandmarkRateHz;
        const double a0 = 14.0 * std::max(0.0, std::sin(2.0 * pi * env_rate * t +
                                                        ph_env));
        const double a1 = 4.0 * (e / 3.0 - 1.0) +
                          2.0 * std::sin(2.0 * pi * 0.3 * t + ph_w);
        const double a2 = 1.5 * std::sin(2.0 * pi * 0.7 * t + ph_w * 0.5);
        lm.col(k) = face + a0 * modes[0] + a1 * modes[1] + a2 * modes[2];
      }

      UtteranceRecord rec;
      rec.id = "syn_" + std::string(emotion_name(e)) + "_" + std::to_string(u);
      rec.speaker = "synth";
      rec.emotion = e;
      rec.wav_path = dir / "wav" / (rec.id + ".wav");
      rec.landmarks_path = dir / "landmarks" / (rec.id + ".csv");
      write_wav(rec.wav_path, clip);
      write_landmark_track(rec.landmarks_path, lm);
      out.records.push_back(std::move(rec));
    }
  }
  out.manifest = dir / "manifest.csv";
  {
    // store paths relative to the manifest so the corpus moves as a unit
    std::vector<UtteranceRecord> rel = out.records;
    for (auto& r : rel) {
      r.wav_path = fs::path("wav") / r.wav_path.filename();
      r.landmarks_path = fs::path("landmarks") / r.landmarks_path.filename();
    }
    write_manifest(out.manifest, rel);
  }
  return out;
}

}  // namespace emoanim

#endif  // EMOANIM_SYNTH_HPP_
