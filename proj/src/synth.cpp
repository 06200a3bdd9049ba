// Copyright 2026 The LinearVC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "linearvc/synth.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>

#include "linearvc/errors.hpp"
#include "linearvc/factorization.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

std::string_view to_string(TransformFamily family) {
  return family == TransformFamily::kOrthogonal ? "orthogonal" : "affine";
}

TransformFamily parse_transform_family(std::string_view name) {
  if (name == "orthogonal") return TransformFamily::kOrthogonal;
  if (name == "affine") return TransformFamily::kAffine;
  throw ParameterError("unknown transform family '" + std::string(name) +
                       "' (expected orthogonal or affine)");
}

void SynthSpec::validate() const {
  if (n_frames < 1) throw ParameterError("synth: n_frames must be >= 1");
  if (d < 1) throw ParameterError("synth: d must be >= 1");
  if (r_true < 1 || r_true > d)
    throw ParameterError("synth: r_true must lie in [1, d]");
  if (k_speakers < 1) throw ParameterError("synth: k_speakers must be >= 1");
  if (n_content_classes < 2)
    throw ParameterError("synth: n_content_classes must be >= 2");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw ParameterError("synth: noise_sigma must be finite and >= 0");
  for (double v : {centroid_scale, cluster_spread, mixing_strength, bias_scale})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ParameterError("synth: plant geometry parameters must be finite and >= 0");
  if (!(speaker_spread >= 0.0 && speaker_spread <= 1.0))
    throw ParameterError("synth: speaker_spread must lie in [0, 1]");
}

namespace {

// Independent generator per (seed, stream) so speakers can be drawn in any
// order.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

Matrix gaussian(Index rows, Index cols, double scale, std::mt19937_64 &rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = scale * normal(rng);
  return m;
}

// r x d with orthonormal rows spanning the columns of g (d x r).
Matrix orthonormal_rows(const Eigen::MatrixXd &g) {
  const Index d = g.rows(), r = g.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, r);
  return q.transpose();
}

Matrix select_rows(const Matrix &m, std::span<const Index> rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

}  // namespace

Matrix SynthTruth::render(Index k, std::span<const Index> rows) const {
  Matrix c = rows.empty() ? content_points : select_rows(content_points, rows);
  Matrix out = c * speaker_transforms[k];
  out.rowwise() += speaker_biases[k].transpose();
  return out;
}

Matrix SynthTruth::rendered_centroids(Index k) const {
  Matrix out = class_centroids * speaker_transforms[k];
  out.rowwise() += speaker_biases[k].transpose();
  return out;
}

SynthData generate(const SynthSpec &spec) {
  spec.validate();
  const Index n = spec.n_frames, d = spec.d, r = spec.r_true;
  const Index k_spk = spec.k_speakers;

  SynthTruth truth;
  auto content_rng = stream_rng(spec.seed, 0);
  truth.class_centroids =
      gaussian(spec.n_content_classes, r, spec.centroid_scale, content_rng);
  std::uniform_int_distribution<Index> pick(0, spec.n_content_classes - 1);
  truth.content_labels.resize(static_cast<std::size_t>(n));
  for (auto &label : truth.content_labels) label = pick(content_rng);
  truth.content_points = gaussian(n, r, spec.cluster_spread, content_rng);
  for (Index i = 0; i < n; ++i)
    truth.content_points.row(i) += truth.class_centroids.row(truth.content_labels[i]);

  SynthData data;
  Eigen::MatrixXd shared;
  if (spec.speaker_spread < 1.0) {
    auto rng = stream_rng(spec.seed, 1 + 2 * static_cast<std::uint64_t>(k_spk));
    shared = gaussian(d, r, 1.0, rng);
  }
  for (Index k = 0; k < k_spk; ++k) {
    auto rng = stream_rng(spec.seed, 1 + static_cast<std::uint64_t>(k));
    Eigen::MatrixXd g = gaussian(d, r, 1.0, rng);
    if (spec.speaker_spread < 1.0)
      g = spec.speaker_spread * g +
          std::sqrt(1.0 - spec.speaker_spread * spec.speaker_spread) * shared;
    Matrix t = orthonormal_rows(g);
    Vector b = Vector::Zero(d);
    if (spec.transform_family == TransformFamily::kAffine) {
      const Matrix mix = Matrix::Identity(r, r) +
                         gaussian(r, r, spec.mixing_strength / std::sqrt(double(r)), rng);
      t = (mix * t).eval();
      b = gaussian(d, 1, spec.bias_scale / std::sqrt(double(d)), rng).col(0);
    }
    truth.speaker_transforms.push_back(std::move(t));
    truth.speaker_biases.push_back(std::move(b));
  }
  for (Index k = 0; k < k_spk; ++k) {
    Matrix x = truth.render(k);
    if (spec.noise_sigma > 0.0) {
      auto rng = stream_rng(spec.seed, 1 + static_cast<std::uint64_t>(k_spk + k));
      x += gaussian(n, d, spec.noise_sigma, rng);
    }
    data.speakers.emplace_back(std::move(x));
  }
  data.truth = std::move(truth);
  return data;
}

double content_accuracy(const FeatureMatrix &converted, const SynthTruth &truth,
                        Index target_speaker, std::span<const Index> rows) {
  if (target_speaker < 0 || target_speaker >= truth.speakers())
    throw ParameterError("content_accuracy: target speaker out of range");
  const Matrix centroids = truth.rendered_centroids(target_speaker);
  const auto expected_rows =
      rows.empty() ? truth.content_points.rows() : static_cast<Index>(rows.size());
  if (converted.rows() != expected_rows || converted.cols() != centroids.cols())
    throw ShapeError("content_accuracy: converted frames do not match the truth");
  Index correct = 0;
  for (Index i = 0; i < converted.rows(); ++i) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centroids.rows(); ++c) {
      const double dist = (converted.values().row(i) - centroids.row(c)).squaredNorm();
      if (dist < best_d) {
        best_d = dist;
        best = c;
      }
    }
    const Index row = rows.empty() ? i : rows[i];
    if (best == truth.content_labels[row]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(converted.rows());
}

double speaker_score(const FeatureMatrix &converted, const SynthTruth &truth,
                     Index target_speaker, std::span<const Index> rows) {
  if (target_speaker < 0 || target_speaker >= truth.speakers())
    throw ParameterError("speaker_score: target speaker out of range");
  const Matrix reference = truth.render(target_speaker, rows);
  if (converted.rows() != reference.rows() || converted.cols() != reference.cols())
    throw ShapeError("speaker_score: converted frames do not match the truth");
  const RowVector a = converted.values().colwise().mean();
  const RowVector b = reference.colwise().mean();
  const double denom = a.norm() * b.norm();
  if (denom < 1e-12) return 0.0;
  return a.dot(b) / denom;
}

void save_synth(const SynthData &data, const SynthSpec &spec,
                const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  const SynthTruth &t = data.truth;
  for (std::size_t k = 0; k < data.speakers.size(); ++k) {
    const auto ks = std::to_string(k);
    write_matrix(data.speakers[k], dir / ("speaker_" + ks + ".lvcf"));
    write_matrix(FeatureMatrix(t.speaker_transforms[k]), dir / ("T_" + ks + ".lvcf"));
    write_matrix(FeatureMatrix(Matrix(t.speaker_biases[k].transpose())),
                 dir / ("b_" + ks + ".lvcf"));
  }
  Matrix labels(static_cast<Index>(t.content_labels.size()), 1);
  for (std::size_t i = 0; i < t.content_labels.size(); ++i)
    labels(static_cast<Index>(i), 0) = static_cast<double>(t.content_labels[i]);
  write_matrix(FeatureMatrix(std::move(labels)), dir / "labels.lvcf");
  write_matrix(FeatureMatrix(t.content_points), dir / "content.lvcf");
  write_matrix(FeatureMatrix(t.class_centroids), dir / "centroids.lvcf");
  write_manifest(dir / "manifest.txt",
                 {{"n_frames", std::to_string(spec.n_frames)},
                  {"d", std::to_string(spec.d)},
                  {"r_true", std::to_string(spec.r_true)},
                  {"k_speakers", std::to_string(spec.k_speakers)},
                  {"n_content_classes", std::to_string(spec.n_content_classes)},
                  {"noise_sigma", std::to_string(spec.noise_sigma)},
                  {"transform_family", std::string(to_string(spec.transform_family))},
                  {"speaker_spread", std::to_string(spec.speaker_spread)},
                  {"seed", std::to_string(spec.seed)}});
}

SynthTruth load_truth(const std::filesystem::path &dir) {
  const auto mpath = dir / "manifest.txt";
  const Manifest mf = read_manifest(mpath);
  const Index k_spk = std::stoll(manifest_get(mf, "k_speakers", mpath));
  SynthTruth t;
  const FeatureMatrix labels = read_matrix(dir / "labels.lvcf");
  t.content_points = read_matrix(dir / "content.lvcf").values();
  t.class_centroids = read_matrix(dir / "centroids.lvcf").values();
  if (labels.cols() != 1 || labels.rows() != t.content_points.rows())
    throw ConsistencyError(dir.string() + ": labels.lvcf does not match content");
  for (Index i = 0; i < labels.rows(); ++i) {
    const double v = labels(i, 0);
    if (v < 0 || v != std::floor(v) || v >= static_cast<double>(t.class_centroids.rows()))
      throw ConsistencyError(dir.string() + ": label out of range at row " +
                             std::to_string(i));
    t.content_labels.push_back(static_cast<Index>(v));
  }
  for (Index k = 0; k < k_spk; ++k) {
    const auto ks = std::to_string(k);
    t.speaker_transforms.push_back(read_matrix(dir / ("T_" + ks + ".lvcf")).values());
    t.speaker_biases.push_back(
        read_matrix(dir / ("b_" + ks + ".lvcf")).values().row(0).transpose());
  }
  return t;
}

// ---------------------------------------------------------------------------

namespace {

struct Split {
  std::vector<Index> train;
  std::vector<Index> eval;
  std::map<Index, std::vector<Index>> eval_by_class;
};

Split split_frames(const SynthTruth &truth) {
  Split s;
  const Index n = truth.content_points.rows();
  const Index half = n / 2;
  for (Index i = 0; i < n; ++i) {
    if (i < half || n == 1) {
      s.train.push_back(i);
    } else {
      s.eval.push_back(i);
      s.eval_by_class[truth.content_labels[i]].push_back(i);
    }
  }
  if (s.eval.empty()) {
    s.eval = s.train;
    for (Index i : s.eval) s.eval_by_class[truth.content_labels[i]].push_back(i);
  }
  return s;
}

FeatureMatrix rows_of(const FeatureMatrix &m, std::span<const Index> rows) {
  return FeatureMatrix(select_rows(m.values(), rows));
}

// Mean speaker_score over per-class utterances of held-out frames.
template <class Convert>
double utterance_score(const Split &split, const FeatureMatrix &source,
                       const SynthTruth &truth, Index target, Convert &&convert) {
  double total = 0.0;
  for (const auto &[label, rows] : split.eval_by_class) {
    const FeatureMatrix converted = convert(rows_of(source, rows));
    total += speaker_score(converted, truth, target, rows);
  }
  return total / static_cast<double>(split.eval_by_class.size());
}

}  // namespace

FamilyEvaluation evaluate_transform_families(const SynthSpec &spec) {
  const SynthData data = generate(spec);
  if (spec.k_speakers < 2)
    throw ParameterError("evaluate_transform_families: need two or more speakers");
  const Split split = split_frames(data.truth);

  struct Config {
    double FamilyScores::*slot;
    MapKind kind;
    bool bias;
  };
  const Config configs[] = {
      {&FamilyScores::bias_only, MapKind::kBiasOnly, true},
      {&FamilyScores::orthogonal, MapKind::kOrthogonal, false},
      {&FamilyScores::orthogonal_bias, MapKind::kOrthogonal, true},
      {&FamilyScores::unconstrained, MapKind::kUnconstrained, false},
      {&FamilyScores::unconstrained_bias, MapKind::kUnconstrained, true},
  };

  FamilyEvaluation ev;
  Index pairs = 0;
  for (Index s = 0; s < spec.k_speakers; ++s) {
    const FeatureMatrix x_train = rows_of(data.speakers[s], split.train);
    const FeatureMatrix x_eval = rows_of(data.speakers[s], split.eval);
    for (Index t = 0; t < spec.k_speakers; ++t) {
      if (s == t) continue;
      ++pairs;
      const FeatureMatrix y_train = rows_of(data.speakers[t], split.train);
      for (const auto &cfg : configs) {
        const LinearMap map = fit(x_train, y_train, cfg.kind, cfg.bias);
        ev.speaker.*cfg.slot += utterance_score(
            split, data.speakers[s], data.truth, t,
            [&](const FeatureMatrix &x) { return apply(map, x); });
        ev.content.*cfg.slot +=
            content_accuracy(apply(map, x_eval), data.truth, t, split.eval);
      }
      ev.speaker.unconverted += utterance_score(
          split, data.speakers[s], data.truth, t,
          [](const FeatureMatrix &x) { return x; });
      ev.content.unconverted += content_accuracy(x_eval, data.truth, t, split.eval);
    }
    ev.speaker.self += utterance_score(split, data.speakers[s], data.truth, s,
                                       [](const FeatureMatrix &x) { return x; });
    ev.content.self += content_accuracy(x_eval, data.truth, s, split.eval);
  }
  for (auto *scores : {&ev.speaker, &ev.content})
    for (double FamilyScores::*slot :
         {&FamilyScores::bias_only, &FamilyScores::orthogonal,
          &FamilyScores::orthogonal_bias, &FamilyScores::unconstrained,
          &FamilyScores::unconstrained_bias, &FamilyScores::unconverted})
      scores->*slot /= static_cast<double>(pairs);
  ev.speaker.self /= static_cast<double>(spec.k_speakers);
  ev.content.self /= static_cast<double>(spec.k_speakers);
  return ev;
}

std::vector<RankPoint> evaluate_rank_trend(const SynthSpec &spec,
                                           std::span<const Index> ranks) {
  const SynthData data = generate(spec);
  if (spec.k_speakers < 2)
    throw ParameterError("evaluate_rank_trend: need two or more speakers");
  const Split split = split_frames(data.truth);

  std::vector<FeatureMatrix> train;
  std::vector<std::string> ids;
  for (Index k = 0; k < spec.k_speakers; ++k) {
    train.push_back(rows_of(data.speakers[k], split.train));
    ids.push_back(std::to_string(k));
  }
  const Matrix block = stack_aligned(train);
  const SvdResult full = svd(block);
  const double total = block.squaredNorm();

  std::vector<RankPoint> out;
  for (Index r : ranks) {
    const SpeakerFactorization f =
        factorize_from_svd(full, block.rows(), ids, spec.d, r);
    RankPoint p;
    p.rank = r;
    p.relative_error = std::sqrt(reconstruction_error(f, block) / total);
    Index pairs = 0;
    for (Index s = 0; s < spec.k_speakers; ++s) {
      const FeatureMatrix x_eval = rows_of(data.speakers[s], split.eval);
      for (Index t = 0; t < spec.k_speakers; ++t) {
        if (s == t) continue;
        ++pairs;
        p.content_accuracy += content_accuracy(
            convert(f, x_eval, ids[s], ids[t]), data.truth, t, split.eval);
        p.speaker_score += utterance_score(
            split, data.speakers[s], data.truth, t,
            [&](const FeatureMatrix &x) { return convert(f, x, ids[s], ids[t]); });
      }
    }
    p.content_accuracy /= static_cast<double>(pairs);
    p.speaker_score /= static_cast<double>(pairs);
    out.push_back(p);
  }
  return out;
}

}  // namespace linearvc
