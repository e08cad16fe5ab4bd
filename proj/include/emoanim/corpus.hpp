// emoanim/corpus.hpp

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

// Corpus plumbing: the utterance manifest, stratified fold plans, paired
// audio/landmark feature extraction, and assembly of supervised example
// sets. Normalization and shape-model statistics are always fitted on a
// caller-supplied (training) subset, never on the whole corpus.

#ifndef EMOANIM_CORPUS_HPP_
#define EMOANIM_CORPUS_HPP_

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "emoanim/emotion.hpp"
#include "emoanim/io_util.hpp"
#include "emoanim/mfsc.hpp"
#include "emoanim/rng.hpp"
#include "emoanim/shape_model.hpp"
#include "emoanim/track.hpp"
#include "emoanim/trainer.hpp"
#include "emoanim/wav.hpp"

namespace emoanim {

inline constexpr int kLandmarkRateHz = 25;

struct UtteranceRecord {
  std::string id;
  std::string speaker;
  int emotion = 0;
  std::filesystem::path wav_path;
  std::filesystem::path landmarks_path;
};

// Manifest CSV: "id,speaker,emotion,wav,landmarks", one utterance per row,
// optional header. Relative paths are resolved against the manifest's
// directory.
inline std::vector<UtteranceRecord> load_manifest(
    const std::filesystem::path& path) {
  const auto rows = read_csv(path);
  const std::filesystem::path base = path.parent_path();

  std::vector<UtteranceRecord> records;
  std::map<std::string, bool> seen;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.empty() || (row.size() == 1 && row[0].empty())) continue;
    if (r == 0 && !row.empty() && row[0] == "id") continue;  // header
    if (row.size() != 5)
      throw std::runtime_error(path.string() + " row " + std::to_string(r + 1) +
                               ": expected 5 columns, got " +
                               std::to_string(row.size()));
    UtteranceRecord rec;
    rec.id = row[0];
    rec.speaker = row[1];
    try {
      rec.emotion = emotion_index(row[2]);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + " row " + std::to_string(r + 1) +
                               " (id '" + rec.id + "'): unknown emotion '" +
                               row[2] + "'");
    }
    auto resolve = [&](const std::string& p) {
      std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    rec.wav_path = resolve(row[3]);
    rec.landmarks_path = resolve(row[4]);
    if (seen.count(rec.id))
      throw std::runtime_error(path.string() + ": duplicate id '" + rec.id +
                               "'");
    seen[rec.id] = true;
    for (const auto& fp : {rec.wav_path, rec.landmarks_path})
      if (!std::filesystem::exists(fp))
        throw std::runtime_error("record '" + rec.id +
                                 "': missing file " + fp.string());
    records.push_back(std::move(rec));
  }
  return records;
}

inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<UtteranceRecord>& records) {
  std::string out = "id,speaker,emotion,wav,landmarks\n";
  for (const auto& r : records) {
    out += r.id + "," + r.speaker + "," + emotion_name(r.emotion) + "," +
           r.wav_path.string() + "," + r.landmarks_path.string() + "\n";
  }
  write_text_file(path, out);
}

// ---------------------------------------------------------------------------
// Fold plans.

struct Fold {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

struct FoldPlan {
  std::vector<std::string> test;
  std::vector<Fold> folds;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["test"] = test;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : folds)
      j["folds"].push_back({{"train", f.train}, {"val", f.val}});
    return j;
  }
  static FoldPlan from_json(const nlohmann::json& j) {
    FoldPlan p;
    p.test = j.at("test").get<std::vector<std::string>>();
    for (const auto& jf : j.at("folds"))
      p.folds.push_back(Fold{jf.at("train").get<std::vector<std::string>>(),
                             jf.at("val").get<std::vector<std::string>>()});
    return p;
  }
  void save(const std::filesystem::path& path) const {
    write_text_file(path, to_json().dump(2) + "\n");
  }
  static FoldPlan load(const std::filesystem::path& path) {
    return from_json(nlohmann::json::parse(read_text_file(path)));
  }
};

struct FoldOptions {
  int n_folds = 5;
  double test_frac = 0.10;
  // When set, the whole speaker becomes the test set instead of a random
  // stratified draw (speaker-independent evaluation).
  std::string speaker_holdout;
};

namespace detail {

// Largest-remainder apportionment of `total` across groups, proportional to
// group sizes. Keeps every group within one item of its exact quota.
inline std::vector<int> apportion(const std::vector<int>& sizes, int total) {
  const int n = static_cast<int>(sizes.size());
  const int whole = std::accumulate(sizes.begin(), sizes.end(), 0);
  std::vector<int> take(static_cast<std::size_t>(n), 0);
  if (whole == 0 || total <= 0) return take;
  std::vector<double> frac(static_cast<std::size_t>(n), 0.0);
  int assigned = 0;
  for (int g = 0; g < n; ++g) {
    const double quota = static_cast<double>(sizes[static_cast<std::size_t>(g)]) *
                         total / whole;
    take[static_cast<std::size_t>(g)] = static_cast<int>(quota);
    frac[static_cast<std::size_t>(g)] = quota - take[static_cast<std::size_t>(g)];
    assigned += take[static_cast<std::size_t>(g)];
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return frac[static_cast<std::size_t>(a)] > frac[static_cast<std::size_t>(b)];
  });
  for (int i = 0; assigned < total && i < n; ++i) {
    int g = order[static_cast<std::size_t>(i)];
    if (take[static_cast<std::size_t>(g)] < sizes[static_cast<std::size_t>(g)]) {
      ++take[static_cast<std::size_t>(g)];
      ++assigned;
    }
  }
  if (assigned != total)
    throw std::logic_error("apportion: cannot reach requested total");
  return take;
}

}  // namespace detail

// Deterministic stratified folds. Test draw is apportioned per emotion
// (largest remainder), then the remaining records are dealt round-robin into
// n_folds validation chunks; fold k trains on everything outside chunk k.
inline FoldPlan make_folds(const std::vector<std::string>& ids,
                           const std::vector<int>& emotions,
                           const std::vector<std::string>& speakers,
                           std::uint64_t seed, const FoldOptions& opt = {}) {
  const int n = static_cast<int>(ids.size());
  if (emotions.size() != ids.size() || speakers.size() != ids.size())
    throw std::invalid_argument("make_folds: parallel array size mismatch");
  if (n < 10) throw std::invalid_argument("make_folds: need at least 10 records");
  if (opt.n_folds < 2) throw std::invalid_argument("make_folds: need >= 2 folds");
  if (opt.test_frac < 0.0 || opt.test_frac >= 1.0)
    throw std::invalid_argument("make_folds: bad test fraction");

  FoldPlan plan;
  std::vector<int> pool;  // record indices not in test
  if (!opt.speaker_holdout.empty()) {
    for (int i = 0; i < n; ++i) {
      if (speakers[static_cast<std::size_t>(i)] == opt.speaker_holdout)
        plan.test.push_back(ids[static_cast<std::size_t>(i)]);
      else
        pool.push_back(i);
    }
    if (plan.test.empty())
      throw std::invalid_argument("make_folds: no records for holdout speaker '" +
                                  opt.speaker_holdout + "'");
  } else {
    // per-emotion shuffled groups
    std::vector<std::vector<int>> groups(kNumEmotions);
    for (int i = 0; i < n; ++i)
      groups[static_cast<std::size_t>(emotions[static_cast<std::size_t>(i)])]
          .push_back(i);
    for (int e = 0; e < kNumEmotions; ++e) {
      Rng rng(derive_seed(seed, std::string("fold-group-") + emotion_name(e)));
      rng.shuffle(groups[static_cast<std::size_t>(e)]);
    }
    std::vector<int> sizes;
    for (const auto& g : groups) sizes.push_back(static_cast<int>(g.size()));
    const int test_total = static_cast<int>(std::lround(n * opt.test_frac));
    const std::vector<int> take = detail::apportion(sizes, test_total);
    for (int e = 0; e < kNumEmotions; ++e) {
      const auto& g = groups[static_cast<std::size_t>(e)];
      const int t = take[static_cast<std::size_t>(e)];
      for (int k = 0; k < static_cast<int>(g.size()); ++k) {
        if (k < t)
          plan.test.push_back(ids[static_cast<std::size_t>(g[static_cast<std::size_t>(k)])]);
        else
          pool.push_back(g[static_cast<std::size_t>(k)]);
      }
      if (static_cast<int>(g.size()) - t < opt.n_folds && !g.empty())
        throw std::invalid_argument(
            std::string("make_folds: too few records for emotion '") +
            emotion_name(e) + "' (" + std::to_string(g.size()) + ")");
    }
  }

  // Deal the pool round-robin into validation chunks. The pool is ordered by
  // emotion group, so each fold's validation stays stratified within one
  // item per emotion; chunk totals differ by at most one.
  for (int f = 0; f < opt.n_folds; ++f) {
    Fold fold;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const int idx = pool[i];
      if (i % static_cast<std::size_t>(opt.n_folds) ==
          static_cast<std::size_t>(f))
        fold.val.push_back(ids[static_cast<std::size_t>(idx)]);
      else
        fold.train.push_back(ids[static_cast<std::size_t>(idx)]);
    }
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

inline FoldPlan make_folds(const std::vector<UtteranceRecord>& records,
                           std::uint64_t seed, const FoldOptions& opt = {}) {
  std::vector<std::string> ids, speakers;
  std::vector<int> emotions;
  for (const auto& r : records) {
    ids.push_back(r.id);
    speakers.push_back(r.speaker);
    emotions.push_back(r.emotion);
  }
  return make_folds(ids, emotions, speakers, seed, opt);
}

// ---------------------------------------------------------------------------
// Feature extraction.

struct RawUtterance {
  UtteranceRecord rec;
  SpectralSequence mfsc;      // un-normalized, truncated to the common length
  Eigen::MatrixXd landmarks;  // 72 x N, upsampled to the acoustic rate
  bool flagged = false;       // audio/shape frame counts differed by > 3
};

struct ExtractionResult {
  std::vector<RawUtterance> utterances;
  std::vector<std::string> warnings;
};

// Reads one utterance pair: WAV -> MFSC at 100 Hz; landmark CSV at 25 Hz ->
// Catmull-Rom upsample x4 -> truncate both to the shorter length.
inline RawUtterance extract_utterance(const UtteranceRecord& rec,
                                      const FrontendConfig& cfg) {
  RawUtterance u;
  u.rec = rec;
  const AudioClip clip = read_wav(rec.wav_path);
  u.mfsc = extract_mfsc(clip, cfg);

  Eigen::MatrixXd lm25 = load_landmark_track(rec.landmarks_path);
  if (lm25.cols() < 4)
    throw std::runtime_error("record '" + rec.id + "': landmark track has " +
                             std::to_string(lm25.cols()) +
                             " frames, need at least 4");
  const int factor = static_cast<int>(std::lround(cfg.frame_rate())) /
                     kLandmarkRateHz;
  if (factor < 1)
    throw std::invalid_argument("acoustic frame rate below the landmark rate");
  u.landmarks = upsample_track(lm25, factor);

  const int na = u.mfsc.size();
  const int ns = static_cast<int>(u.landmarks.cols());
  u.flagged = std::abs(na - ns) > 3;
  const int common = std::min(na, ns);
  u.mfsc.frames.conservativeResize(Eigen::NoChange, common);
  u.landmarks.conservativeResize(Eigen::NoChange, common);
  return u;
}

inline ExtractionResult extract_corpus(
    const std::vector<UtteranceRecord>& records, const FrontendConfig& cfg) {
  ExtractionResult out;
  for (const auto& rec : records) {
    try {
      RawUtterance u = extract_utterance(rec, cfg);
      if (u.flagged)
        out.warnings.push_back("record '" + rec.id +
                               "': audio/shape frame counts differ by > 3");
      out.utterances.push_back(std::move(u));
    } catch (const std::exception& e) {
      out.warnings.push_back(std::string("skipped: ") + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembled corpus: normalized sequences plus per-utterance PCA parameter
// tracks, with the statistics (z-score, GPA reference, PCA basis) fitted on
// fit_ids only.

struct CorpusFeatures {
  std::shared_ptr<std::vector<SpectralSequence>> sequences;
  std::vector<std::string> ids;
  std::vector<std::string> speakers;
  std::vector<int> emotions;
  std::vector<Eigen::MatrixXd> params;  // pca_dim x N per utterance
  Normalizer normalizer;
  ShapeModel shape_model;
  int ka = 15;
  int kv = 5;

  std::size_t size() const { return ids.size(); }

  int index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (ids[i] == id) return static_cast<int>(i);
    return -1;
  }

  std::vector<int> indices_of(std::span<const std::string> want) const {
    std::vector<int> out;
    for (const auto& id : want) {
      const int i = index_of(id);
      if (i < 0) throw std::invalid_argument("unknown utterance id '" + id + "'");
      out.push_back(i);
    }
    return out;
  }
};

inline CorpusFeatures build_corpus_features(
    const std::vector<RawUtterance>& utts,
    std::span<const std::string> fit_ids, int ka, int kv, int pca_dim) {
  if (utts.empty()) throw std::invalid_argument("build_corpus_features: empty");
  if (ka <= 0 || ka % 2 == 0 || kv <= 0 || kv % 2 == 0)
    throw std::invalid_argument("build_corpus_features: Ka and Kv must be odd");

  auto find = [&](const std::string& id) -> const RawUtterance* {
    for (const auto& u : utts)
      if (u.rec.id == id) return &u;
    throw std::invalid_argument("fit id '" + id + "' not in extracted corpus");
  };

  // z-score statistics over the fit subset only
  std::vector<SpectralSequence> fit_seqs;
  for (const auto& id : fit_ids) fit_seqs.push_back(find(id)->mfsc);
  if (fit_seqs.empty())
    throw std::invalid_argument("build_corpus_features: no fit utterances");

  CorpusFeatures cf;
  cf.ka = ka;
  cf.kv = kv;
  cf.normalizer = Normalizer::fit(fit_seqs);

  // shape statistics: GPA + PCA over every frame of the fit subset
  std::vector<ShapeVector> fit_shapes;
  for (const auto& id : fit_ids) {
    const Eigen::MatrixXd& lm = find(id)->landmarks;
    for (int j = 0; j < lm.cols(); ++j) fit_shapes.push_back(lm.col(j));
  }
  GpaResult gpa = gpa_align(fit_shapes);
  cf.shape_model.reference = gpa.reference;
  cf.shape_model.pca = fit_pca(gpa.aligned, pca_dim);

  cf.sequences = std::make_shared<std::vector<SpectralSequence>>();
  for (const auto& u : utts) {
    cf.ids.push_back(u.rec.id);
    cf.speakers.push_back(u.rec.speaker);
    cf.emotions.push_back(u.rec.emotion);
    cf.sequences->push_back(cf.normalizer.apply(u.mfsc));
    cf.params.push_back(cf.shape_model.params_track(u.landmarks));
  }
  return cf;
}

// ---------------------------------------------------------------------------
// Example-set assembly.

// One classification example per frame of each selected utterance.
inline ExampleSet dern_examples(const CorpusFeatures& cf,
                                std::span<const std::string> ids) {
  ExampleSet set;
  set.sequences = cf.sequences;
  set.window = cf.ka;
  for (int idx : cf.indices_of(ids)) {
    const int n = static_cast<int>(
        cf.params[static_cast<std::size_t>(idx)].cols());
    for (int j = 0; j < n; ++j) {
      set.refs.push_back({idx, j});
      set.labels.push_back(cf.emotions[static_cast<std::size_t>(idx)]);
    }
  }
  return set;
}

// One regression example per frame; target = the Kv-frame window of PCA
// parameters centered on the same 10 ms frame as the spectral image.
// emotion = -1 pools every utterance (the "all combined" condition);
// otherwise only utterances labeled with that emotion contribute.
inline ExampleSet dsrn_examples(const CorpusFeatures& cf,
                                std::span<const std::string> ids,
                                int emotion = -1) {
  const int dim = cf.shape_model.pca.dim() > 0 ? cf.shape_model.pca.dim()
                                               : (cf.params.empty()
                                                      ? 0
                                                      : static_cast<int>(
                                                            cf.params[0].rows()));
  ExampleSet set;
  set.sequences = cf.sequences;
  set.window = cf.ka;
  std::vector<std::pair<int, int>> picks;  // (utterance, frame)
  for (int idx : cf.indices_of(ids)) {
    if (emotion >= 0 && cf.emotions[static_cast<std::size_t>(idx)] != emotion)
      continue;
    const int n = static_cast<int>(
        cf.params[static_cast<std::size_t>(idx)].cols());
    for (int j = 0; j < n; ++j) picks.emplace_back(idx, j);
  }
  set.targets.resize(static_cast<Eigen::Index>(dim) * cf.kv,
                     static_cast<Eigen::Index>(picks.size()));
  for (std::size_t k = 0; k < picks.size(); ++k) {
    set.refs.push_back({picks[k].first, picks[k].second});
    set.targets.col(static_cast<Eigen::Index>(k)) = shape_window(
        cf.params[static_cast<std::size_t>(picks[k].first)], picks[k].second,
        cf.kv);
  }
  return set;
}

// ---------------------------------------------------------------------------
// Features cache. One file carries everything training needs: normalized
// sequences, parameter tracks, labels, and the fitted statistics. Layout:
// magic "EAFC1\n", u32 header length, JSON header, one little-endian
// float32 blob (sequences then params, utterance by utterance), u32 CRC32.

inline void save_corpus_features(const CorpusFeatures& cf,
                                 const std::filesystem::path& path) {
  static constexpr char kMagic[6] = {'E', 'A', 'F', 'C', '1', '\n'};
  nlohmann::json hdr;
  hdr["ka"] = cf.ka;
  hdr["kv"] = cf.kv;
  hdr["ids"] = cf.ids;
  hdr["speakers"] = cf.speakers;
  hdr["emotions"] = cf.emotions;
  hdr["bands"] = cf.sequences->empty()
                     ? 0
                     : static_cast<int>(cf.sequences->front().frames.rows());
  hdr["param_dim"] =
      cf.params.empty() ? 0 : static_cast<int>(cf.params.front().rows());
  std::vector<int> frames;
  for (const auto& s : *cf.sequences) frames.push_back(s.size());
  hdr["frames"] = frames;
  hdr["normalizer"] = cf.normalizer.to_json();
  hdr["shape_model"] = cf.shape_model.to_json();

  std::vector<double> blob;
  for (std::size_t i = 0; i < cf.size(); ++i) {
    const auto& m = cf.sequences->at(i).frames;
    blob.insert(blob.end(), m.data(), m.data() + m.size());
    const auto& p = cf.params[i];
    blob.insert(blob.end(), p.data(), p.data() + p.size());
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kMagic, sizeof kMagic);
  const std::string hs = hdr.dump();
  write_u32le(out, static_cast<std::uint32_t>(hs.size()));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  write_f32_blob(out, blob);
  write_u32le(out, crc32_of_f32(blob));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline CorpusFeatures load_corpus_features(const std::filesystem::path& path) {
  static constexpr char kMagic[6] = {'E', 'A', 'F', 'C', '1', '\n'};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::string(magic, sizeof magic) != std::string(kMagic, sizeof kMagic))
    throw std::runtime_error("not a features cache: " + path.string());
  const std::uint32_t hlen = read_u32le(in);
  std::string hs(hlen, '\0');
  in.read(hs.data(), hlen);
  if (!in) throw std::runtime_error("truncated header: " + path.string());
  const nlohmann::json hdr = nlohmann::json::parse(hs);

  CorpusFeatures cf;
  cf.ka = hdr.at("ka").get<int>();
  cf.kv = hdr.at("kv").get<int>();
  cf.ids = hdr.at("ids").get<std::vector<std::string>>();
  cf.speakers = hdr.at("speakers").get<std::vector<std::string>>();
  cf.emotions = hdr.at("emotions").get<std::vector<int>>();
  const int bands = hdr.at("bands").get<int>();
  const int param_dim = hdr.at("param_dim").get<int>();
  const auto frames = hdr.at("frames").get<std::vector<int>>();
  if (frames.size() != cf.ids.size())
    throw std::runtime_error("features cache: inconsistent header");
  cf.normalizer = Normalizer::from_json(hdr.at("normalizer"));
  cf.shape_model = ShapeModel::from_json(hdr.at("shape_model"));

  std::size_t total = 0;
  for (int n : frames)
    total += static_cast<std::size_t>(n) * (bands + param_dim);
  std::vector<double> blob(total);
  read_f32_blob(in, blob);
  const std::uint32_t want = read_u32le(in);
  if (crc32_of_f32(blob) != want)
    throw std::runtime_error("features checksum mismatch: " + path.string());

  cf.sequences = std::make_shared<std::vector<SpectralSequence>>();
  std::size_t off = 0;
  for (std::size_t i = 0; i < cf.ids.size(); ++i) {
    const int n = frames[i];
    SpectralSequence seq;
    seq.frames.resize(bands, n);
    std::copy(blob.begin() + static_cast<std::ptrdiff_t>(off),
              blob.begin() + static_cast<std::ptrdiff_t>(off + seq.frames.size()),
              seq.frames.data());
    off += static_cast<std::size_t>(seq.frames.size());
    Eigen::MatrixXd p(param_dim, n);
    std::copy(blob.begin() + static_cast<std::ptrdiff_t>(off),
              blob.begin() + static_cast<std::ptrdiff_t>(off + p.size()),
              p.data());
    off += static_cast<std::size_t>(p.size());
    cf.sequences->push_back(std::move(seq));
    cf.params.push_back(std::move(p));
  }
  return cf;
}

}  // namespace emoanim

#endif  // EMOANIM_CORPUS_HPP_
