// emoanim/pipeline.hpp

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

// End-to-end orchestration behind the CLI subcommands. All artifacts live
// under one run directory:
//   features/corpus.bin      extracted + normalized corpus (prepare)
//   features/fold_plan.json  stratified split (prepare)
//   models/dern.eann         emotion classifier (train-dern)
//   models/dsrn_<e>.eann     per-emotion regressors (train-dsrn)
//   models/dsrn_combined.eann  pooled baseline (train-dsrn --all-combined)
//   logs/*.csv               per-epoch losses
//   report.json              evaluation report (evaluate)
//   animate/<stem>/          animation exports (animate)

#ifndef EMOANIM_PIPELINE_HPP_
#define EMOANIM_PIPELINE_HPP_

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "emoanim/config.hpp"
#include "emoanim/corpus.hpp"
#include "emoanim/emotion.hpp"
#include "emoanim/regress.hpp"
#include "emoanim/svg.hpp"
#include "emoanim/synth.hpp"
#include "emoanim/trainer.hpp"

namespace emoanim {

struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path features_dir() const { return root / "features"; }
  std::filesystem::path models_dir() const { return root / "models"; }
  std::filesystem::path logs_dir() const { return root / "logs"; }
  std::filesystem::path corpus_cache() const {
    return features_dir() / "corpus.bin";
  }
  std::filesystem::path fold_plan() const {
    return features_dir() / "fold_plan.json";
  }
  std::filesystem::path prepare_meta() const {
    return features_dir() / "prepare_meta.json";
  }
  std::filesystem::path dern_model() const {
    return models_dir() / "dern.eann";
  }
  std::filesystem::path dsrn_model(int emotion) const {
    return models_dir() /
           (std::string("dsrn_") + emotion_name(emotion) + ".eann");
  }
  std::filesystem::path combined_model() const {
    return models_dir() / "dsrn_combined.eann";
  }
  std::filesystem::path report() const { return root / "report.json"; }
};

namespace detail {

inline void write_loss_log(const std::filesystem::path& path,
                           const TrainStats& stats) {
  std::string out = "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < stats.train_loss.size(); ++e) {
    out += std::to_string(e) + "," + format_double(stats.train_loss[e]) + ",";
    out += std::isnan(stats.val_loss[e]) ? std::string("nan")
                                         : format_double(stats.val_loss[e]);
    out += "\n";
  }
  write_text_file(path, out);
}

inline const Fold& pick_fold(const FoldPlan& plan, int fold) {
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size()))
    throw std::runtime_error("fold " + std::to_string(fold) +
                             " out of range (plan has " +
                             std::to_string(plan.folds.size()) + ")");
  return plan.folds[static_cast<std::size_t>(fold)];
}

struct LoadedRun {
  CorpusFeatures features;
  FoldPlan plan;
};

inline LoadedRun load_run(const RunPaths& paths) {
  if (!std::filesystem::exists(paths.corpus_cache()))
    throw std::runtime_error("no prepared features at " +
                             paths.corpus_cache().string() +
                             " (run `prepare` first)");
  LoadedRun run;
  run.features = load_corpus_features(paths.corpus_cache());
  run.plan = FoldPlan::load(paths.fold_plan());
  return run;
}

// Per-utterance final parameter track for an already-chosen routing. Used by
// evaluate for all three conditions; `single` (if set) bypasses the bank.
inline Eigen::MatrixXd predict_param_track(DsrnBank* bank, Network* single,
                                           const CorpusFeatures& cf, int idx,
                                           const UtteranceDecision& d) {
  const SpectralSequence& seq = cf.sequences->at(static_cast<std::size_t>(idx));
  const int n = seq.size();
  const int dim = static_cast<int>(cf.params[static_cast<std::size_t>(idx)].rows());
  Eigen::MatrixXd estimates(static_cast<Eigen::Index>(dim) * cf.kv, n);
  for (int j = 0; j < n; ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, cf.ka));
    if (single) {
      const Tensor& out = single->forward(img, /*train=*/false);
      estimates.col(j) = Eigen::Map<const Eigen::VectorXd>(
          out.data.data(), static_cast<Eigen::Index>(out.size()));
    } else {
      estimates.col(j) = fuse_estimate(*bank, img, d);
    }
  }
  return overlap_average(estimates, dim, cf.kv);
}

struct MseTriple {
  double per_coefficient = 0.0;  // mean over frames and the 18 coefficients
  double per_frame = 0.0;        // squared error summed over coefficients
  double per_window = 0.0;       // training-objective convention (18*Kv dims)
};

inline MseTriple mse_for_utterance(DsrnBank* bank, Network* single,
                                   const CorpusFeatures& cf, int idx,
                                   const UtteranceDecision& d) {
  const Eigen::MatrixXd& truth = cf.params[static_cast<std::size_t>(idx)];
  const Eigen::MatrixXd pred = predict_param_track(bank, single, cf, idx, d);
  const int n = static_cast<int>(truth.cols());
  MseTriple m;
  const Eigen::MatrixXd err = pred - truth;
  m.per_coefficient = err.array().square().mean();
  m.per_frame = err.array().square().colwise().sum().mean();

  // window convention: error against the Kv-frame target windows, before
  // overlap averaging
  const SpectralSequence& seq = cf.sequences->at(static_cast<std::size_t>(idx));
  double acc = 0.0;
  for (int j = 0; j < n; ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, cf.ka));
    Eigen::VectorXd est;
    if (single) {
      const Tensor& out = single->forward(img, /*train=*/false);
      est = Eigen::Map<const Eigen::VectorXd>(
          out.data.data(), static_cast<Eigen::Index>(out.size()));
    } else {
      est = fuse_estimate(*bank, img, d);
    }
    const Eigen::VectorXd want = shape_window(truth, j, cf.kv);
    acc += (est - want).squaredNorm() / static_cast<double>(est.size());
  }
  m.per_window = acc / n;
  return m;
}

inline UtteranceDecision oracle_decision(int emotion) {
  UtteranceDecision d;
  d.e_star = emotion;
  d.e_star2 = emotion == 0 ? 1 : 0;
  d.p_star = 1.0;
  d.p_star2 = 0.0;
  d.histogram[static_cast<std::size_t>(emotion)] = 1.0;
  return d;
}

inline nlohmann::json decision_to_json(const UtteranceDecision& d) {
  nlohmann::json j;
  j["e_star"] = emotion_name(d.e_star);
  j["e_star2"] = emotion_name(d.e_star2);
  j["p_star"] = d.p_star;
  j["p_star2"] = d.p_star2;
  j["histogram"] = d.histogram;
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------

// Extract features for the whole corpus, fit fold-train statistics, and
// write the cache + fold plan.
inline void cmd_prepare(const RunConfig& cfg, const RunPaths& paths) {
  if (cfg.manifest.empty())
    throw std::runtime_error("prepare: config has no corpus.manifest");
  const auto records = load_manifest(cfg.manifest);
  std::fprintf(stderr, "prepare: %zu records from %s\n", records.size(),
               cfg.manifest.c_str());

  ExtractionResult ext = extract_corpus(records, cfg.frontend);
  for (const auto& w : ext.warnings)
    std::fprintf(stderr, "prepare: warning: %s\n", w.c_str());
  if (ext.utterances.empty())
    throw std::runtime_error("prepare: no usable utterances");

  std::vector<UtteranceRecord> usable;
  for (const auto& u : ext.utterances) usable.push_back(u.rec);
  FoldOptions fo;
  fo.n_folds = cfg.n_folds;
  fo.test_frac = cfg.test_frac;
  fo.speaker_holdout = cfg.speaker_holdout;
  const FoldPlan plan = make_folds(usable, derive_seed(cfg.seed, "folds"), fo);
  const Fold& fold = detail::pick_fold(plan, cfg.fold);

  const CorpusFeatures cf = build_corpus_features(ext.utterances, fold.train,
                                                  cfg.ka, cfg.kv, cfg.pca_dim);

  std::filesystem::create_directories(paths.features_dir());
  save_corpus_features(cf, paths.corpus_cache());
  plan.save(paths.fold_plan());

  nlohmann::json meta;
  meta["fold"] = cfg.fold;
  meta["seed"] = cfg.seed;
  meta["utterances"] = cf.size();
  meta["pca_dim"] = cf.shape_model.pca.dim();
  meta["variance_covered"] = cf.shape_model.pca.variance_covered;
  meta["warnings"] = ext.warnings;
  write_text_file(paths.prepare_meta(), meta.dump(2) + "\n");

  std::fprintf(stderr,
               "prepare: %zu utterances, fold %d (train %zu / val %zu / "
               "test %zu), PCA D=%d covering %.4f\n",
               cf.size(), cfg.fold, fold.train.size(), fold.val.size(),
               plan.test.size(), cf.shape_model.pca.dim(),
               cf.shape_model.pca.variance_covered);
}

inline void cmd_train_dern(const RunConfig& cfg, const RunPaths& paths) {
  detail::LoadedRun run = detail::load_run(paths);
  const Fold& fold = detail::pick_fold(run.plan, cfg.fold);

  ExampleSet train = dern_examples(run.features, fold.train);
  ExampleSet val = dern_examples(run.features, fold.val);
  const Shape3 in = train.input_shape();

  Network net(in, dern_layers(kNumEmotions, cfg.dern.width_scale),
              derive_seed(cfg.seed, "dern-init"));
  TrainOptions to;
  to.epochs = cfg.dern.epochs;
  to.batch_size = cfg.dern.batch_size;
  to.adam.lr = cfg.dern.lr;
  to.seed = derive_seed(cfg.seed, "dern-train");
  to.objective = Objective::cross_entropy;
  to.on_epoch = [](int e, double tr, double va) {
    std::fprintf(stderr, "dern epoch %d: train %.6f val %.6f\n", e, tr, va);
  };
  const TrainStats stats = train_network(net, train, &val, to);

  std::filesystem::create_directories(paths.models_dir());
  std::filesystem::create_directories(paths.logs_dir());
  net.save(paths.dern_model());
  detail::write_loss_log(paths.logs_dir() / "dern_loss.csv", stats);
  std::fprintf(stderr, "dern: saved %s (frame accuracy on val: %.4f)\n",
               paths.dern_model().string().c_str(),
               evaluate_accuracy(net, val));
}

// emotion >= 0 trains that single model; emotion < 0 with all_combined
// trains the pooled baseline; emotion < 0 otherwise trains all seven.
inline void cmd_train_dsrn(const RunConfig& cfg, const RunPaths& paths,
                           int emotion, bool all_combined) {
  detail::LoadedRun run = detail::load_run(paths);
  const Fold& fold = detail::pick_fold(run.plan, cfg.fold);
  const int out_dim = run.features.shape_model.pca.dim() * run.features.kv;
  std::filesystem::create_directories(paths.models_dir());
  std::filesystem::create_directories(paths.logs_dir());

  auto train_one = [&](int e, const std::filesystem::path& model_path,
                       const std::string& tag) {
    ExampleSet train = dsrn_examples(run.features, fold.train, e);
    ExampleSet val = dsrn_examples(run.features, fold.val, e);
    if (train.empty())
      throw std::runtime_error("train-dsrn: no training examples for " + tag);
    Network net(train.input_shape(), dsrn_layers(out_dim, cfg.dsrn.width_scale),
                derive_seed(cfg.seed, tag + "-init"));
    TrainOptions to;
    to.epochs = cfg.dsrn.epochs;
    to.batch_size = cfg.dsrn.batch_size;
    to.adam.lr = cfg.dsrn.lr;
    to.seed = derive_seed(cfg.seed, tag + "-train");
    to.objective = Objective::mse;
    to.on_epoch = [&tag](int ep, double tr, double va) {
      std::fprintf(stderr, "%s epoch %d: train %.6f val %.6f\n", tag.c_str(),
                   ep, tr, va);
    };
    const TrainStats stats =
        train_network(net, train, val.empty() ? nullptr : &val, to);
    net.save(model_path);
    detail::write_loss_log(paths.logs_dir() / (tag + "_loss.csv"), stats);
    std::fprintf(stderr, "%s: saved %s\n", tag.c_str(),
                 model_path.string().c_str());
  };

  if (all_combined) {
    train_one(-1, paths.combined_model(), "dsrn_combined");
  } else if (emotion >= 0) {
    train_one(emotion, paths.dsrn_model(emotion),
              std::string("dsrn_") + emotion_name(emotion));
  } else {
    for (int e = 0; e < kNumEmotions; ++e)
      train_one(e, paths.dsrn_model(e),
                std::string("dsrn_") + emotion_name(e));
  }
}

// Test-set report: per-emotion utterance-level DERN recall plus the three
// Table-4 style MSE conditions, each under three documented conventions.
inline nlohmann::json cmd_evaluate(const RunConfig& cfg, const RunPaths& paths) {
  detail::LoadedRun run = detail::load_run(paths);
  const CorpusFeatures& cf = run.features;
  if (run.plan.test.empty())
    throw std::runtime_error("evaluate: fold plan has no test utterances");

  Network dern = Network::load(paths.dern_model());
  Network combined = Network::load(paths.combined_model());
  DsrnBank bank;
  bank.kv = cf.kv;
  bank.param_dim = cf.shape_model.pca.dim();
  for (int e = 0; e < kNumEmotions; ++e)
    if (std::filesystem::exists(paths.dsrn_model(e)))
      bank.models[static_cast<std::size_t>(e)] =
          Network::load(paths.dsrn_model(e));
  bank.validate();

  std::array<int, kNumEmotions> utt_total{}, utt_hit{};
  detail::MseTriple oracle{}, predicted{}, comb{};
  int counted = 0;
  for (const std::string& id : run.plan.test) {
    const int idx = cf.index_of(id);
    if (idx < 0) continue;  // skipped at extraction time
    const int truth = cf.emotions[static_cast<std::size_t>(idx)];

    ExampleSet frames =
        dern_examples(cf, std::vector<std::string>{id});
    const std::vector<int> labels = predict_labels(dern, frames);
    const UtteranceDecision d = decide_from_frames(labels);
    ++utt_total[static_cast<std::size_t>(truth)];
    if (d.e_star == truth) ++utt_hit[static_cast<std::size_t>(truth)];

    const auto add = [](detail::MseTriple& a, const detail::MseTriple& b) {
      a.per_coefficient += b.per_coefficient;
      a.per_frame += b.per_frame;
      a.per_window += b.per_window;
    };
    add(oracle, detail::mse_for_utterance(&bank, nullptr, cf, idx,
                                          detail::oracle_decision(truth)));
    add(predicted, detail::mse_for_utterance(&bank, nullptr, cf, idx, d));
    add(comb, detail::mse_for_utterance(nullptr, &combined, cf, idx,
                                        detail::oracle_decision(truth)));
    ++counted;
  }
  if (counted == 0)
    throw std::runtime_error("evaluate: no test utterances survived extraction");
  const auto scale = [&](detail::MseTriple& m) {
    m.per_coefficient /= counted;
    m.per_frame /= counted;
    m.per_window /= counted;
  };
  scale(oracle);
  scale(predicted);
  scale(comb);

  nlohmann::json rep;
  rep["fold"] = cfg.fold;
  rep["test_utterances"] = counted;
  nlohmann::json acc;
  int total = 0, hit = 0;
  for (int e = 0; e < kNumEmotions; ++e) {
    if (utt_total[static_cast<std::size_t>(e)] == 0) continue;
    acc[emotion_name(e)] =
        static_cast<double>(utt_hit[static_cast<std::size_t>(e)]) /
        utt_total[static_cast<std::size_t>(e)];
    total += utt_total[static_cast<std::size_t>(e)];
    hit += utt_hit[static_cast<std::size_t>(e)];
  }
  rep["dern_utterance_accuracy"] = acc;
  rep["dern_utterance_accuracy_overall"] =
      static_cast<double>(hit) / static_cast<double>(total);
  const auto triple = [](const detail::MseTriple& m) {
    nlohmann::json j;
    j["per_coefficient"] = m.per_coefficient;
    j["per_frame"] = m.per_frame;
    j["per_window"] = m.per_window;
    return j;
  };
  rep["mse"] = {{"dern_dsrn", triple(predicted)},
                {"oracle_dsrn", triple(oracle)},
                {"all_combined", triple(comb)}};

  write_text_file(paths.report(), rep.dump(2) + "\n");
  std::fprintf(stderr,
               "evaluate: test n=%d acc=%.4f | per-coefficient MSE "
               "dern+dsrn %.6f oracle %.6f combined %.6f\n",
               counted, static_cast<double>(hit) / total,
               predicted.per_coefficient, oracle.per_coefficient,
               comb.per_coefficient);
  return rep;
}

// Animate an arbitrary WAV with the trained models. Emits one landmark
// frame per 10 ms acoustic frame.
inline std::filesystem::path cmd_animate(const RunConfig& cfg,
                                         const RunPaths& paths,
                                         const std::filesystem::path& wav,
                                         bool render_svg) {
  detail::LoadedRun run = detail::load_run(paths);
  const CorpusFeatures& cf = run.features;

  Network dern = Network::load(paths.dern_model());
  DsrnBank bank;
  bank.kv = cf.kv;
  bank.param_dim = cf.shape_model.pca.dim();
  for (int e = 0; e < kNumEmotions; ++e)
    if (std::filesystem::exists(paths.dsrn_model(e)))
      bank.models[static_cast<std::size_t>(e)] =
          Network::load(paths.dsrn_model(e));

  const AudioClip clip = read_wav(wav);
  const SpectralSequence seq =
      cf.normalizer.apply(extract_mfsc(clip, cfg.frontend));

  // frame-level DERN votes over the same windows the regressors see
  std::vector<int> labels(static_cast<std::size_t>(seq.size()));
  for (int j = 0; j < seq.size(); ++j) {
    const Tensor img = Tensor::from_matrix(spectral_window(seq, j, cf.ka));
    const Tensor& out = dern.forward(img, /*train=*/false);
    Eigen::Index arg = 0;
    Eigen::Map<const Eigen::VectorXd>(out.data.data(),
                                      static_cast<Eigen::Index>(out.size()))
        .maxCoeff(&arg);
    labels[static_cast<std::size_t>(j)] = static_cast<int>(arg);
  }
  const UtteranceDecision decision = decide_from_frames(labels);
  const AnimationResult anim =
      animate(bank, cf.shape_model, seq, cf.ka, decision);

  const std::filesystem::path out_dir =
      paths.root / "animate" / wav.stem().string();
  std::filesystem::create_directories(out_dir);
  write_landmark_track(out_dir / "landmarks.csv", anim.landmarks);
  {
    std::string csv = "frame";
    for (int d = 1; d <= anim.params.rows(); ++d)
      csv += ",p" + std::to_string(d);
    csv += "\n";
    for (int j = 0; j < anim.params.cols(); ++j) {
      csv += std::to_string(j);
      for (int d = 0; d < anim.params.rows(); ++d)
        csv += "," + format_double(anim.params(d, j));
      csv += "\n";
    }
    write_text_file(out_dir / "params.csv", csv);
  }
  nlohmann::json meta;
  meta["wav"] = wav.string();
  meta["frames"] = seq.size();
  meta["frame_rate"] = cfg.frontend.frame_rate();
  meta["decision"] = detail::decision_to_json(decision);
  write_text_file(out_dir / "metadata.json", meta.dump(2) + "\n");
  if (render_svg) write_svg_frames(out_dir / "svg", anim.landmarks);

  std::fprintf(stderr, "animate: %d frames, decision %s (p*=%.3f) -> %s\n",
               seq.size(), emotion_name(decision.e_star), decision.p_star,
               out_dir.string().c_str());
  return out_dir;
}

// Write the synthetic on-disk corpus plus a ready-to-run config for it.
inline std::filesystem::path cmd_synth(const RunConfig& cfg,
                                       const RunPaths& paths) {
  const std::filesystem::path dir = paths.root / "corpus";
  const DumpResult dump = dump_corpus(cfg.synth, dir);
  std::fprintf(stderr, "synth: wrote %zu utterances under %s\n",
               dump.records.size(), dir.string().c_str());
  std::fprintf(stderr, "synth: manifest %s\n", dump.manifest.string().c_str());
  return dump.manifest;
}

}  // namespace emoanim

#endif  // EMOANIM_PIPELINE_HPP_
