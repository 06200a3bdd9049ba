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

#include "linearvc/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include "linearvc/errors.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

namespace {

void check_ids(std::span<const std::string> ids) {
  std::set<std::string_view> seen;
  for (const auto &id : ids) {
    if (id.empty() || id.find_first_of("/\\,=\n") != std::string::npos)
      throw ParameterError("invalid speaker id '" + id +
                           "' (must be non-empty, without / \\ , = or newline)");
    if (!seen.insert(id).second)
      throw ParameterError("duplicate speaker id '" + id + "'");
  }
}

}  // namespace

BlockAssembly assemble_block(std::span<const FeatureMatrix> speakers,
                             Index pivot, Index k_match, unsigned threads) {
  const auto k_speakers = static_cast<Index>(speakers.size());
  if (k_speakers < 2)
    throw ParameterError("assemble_block: need at least two speakers");
  if (pivot < 0 || pivot >= k_speakers)
    throw ParameterError("assemble_block: pivot index " +
                         std::to_string(pivot) + " out of range");
  const Index d = speakers[0].cols();
  for (const auto &s : speakers)
    if (s.cols() != d)
      throw ShapeError("assemble_block: speakers disagree on feature dimension");

  const FeatureMatrix &pivot_mat = speakers[pivot];
  const Index n = pivot_mat.rows();
  BlockAssembly out;
  out.pivot = pivot;
  out.block.resize(n, k_speakers * d);
  out.alignments.resize(speakers.size());
  for (Index j = 0; j < k_speakers; ++j) {
    if (j == pivot) {
      MatchedPairs self;
      self.k = 1;
      for (Index i = 0; i < n; ++i) {
        self.source_indices.push_back(i);
        self.target_indices.push_back(i);
        self.distances.push_back(0.0);
      }
      out.alignments[j] = std::move(self);
      out.block.middleCols(j * d, d) = pivot_mat.values();
      continue;
    }
    out.alignments[j] = match_frames(pivot_mat, speakers[j], k_match, threads);
    out.block.middleCols(j * d, d) =
        gather_targets(out.alignments[j], speakers[j]).values();
  }
  return out;
}

Matrix stack_aligned(std::span<const FeatureMatrix> speakers) {
  if (speakers.empty()) throw ParameterError("stack_aligned: no speakers");
  const Index n = speakers[0].rows();
  const Index d = speakers[0].cols();
  Matrix out(n, d * static_cast<Index>(speakers.size()));
  for (std::size_t k = 0; k < speakers.size(); ++k) {
    if (speakers[k].rows() != n || speakers[k].cols() != d)
      throw ShapeError("stack_aligned: speaker matrices differ in shape");
    out.middleCols(static_cast<Index>(k) * d, d) = speakers[k].values();
  }
  return out;
}

Index SpeakerFactorization::speaker_index(std::string_view id) const {
  const auto it = std::find(speaker_ids.begin(), speaker_ids.end(), id);
  if (it == speaker_ids.end())
    throw UnknownSpeakerError("unknown speaker id '" + std::string(id) + "'");
  return static_cast<Index>(it - speaker_ids.begin());
}

Matrix SpeakerFactorization::stacked_maps() const {
  Matrix s(rank, content_dim * speaker_count());
  for (Index k = 0; k < speaker_count(); ++k)
    s.middleCols(k * content_dim, content_dim) = speaker_maps[k];
  return s;
}

std::string default_pivot(std::span<const std::string> ids) {
  if (ids.empty()) throw ParameterError("no speaker ids");
  return *std::min_element(ids.begin(), ids.end());
}

SpeakerFactorization factorize_from_svd(const SvdResult &full, Index rows,
                                        std::vector<std::string> speaker_ids,
                                        Index d, Index r,
                                        std::string pivot_id) {
  check_ids(speaker_ids);
  const auto k_speakers = static_cast<Index>(speaker_ids.size());
  const Index cols = full.vt.cols();
  if (d < 1 || k_speakers * d != cols)
    throw ShapeError("factorize: block has " + std::to_string(cols) +
                     " columns, expected " + std::to_string(k_speakers) +
                     " speakers x " + std::to_string(d));
  const Index max_rank = std::min(rows, cols);
  if (r < 1 || r > max_rank)
    throw ParameterError("factorize: rank " + std::to_string(r) +
                         " outside [1, " + std::to_string(max_rank) + "]");
  if (pivot_id.empty()) pivot_id = default_pivot(speaker_ids);
  if (std::find(speaker_ids.begin(), speaker_ids.end(), pivot_id) ==
      speaker_ids.end())
    throw UnknownSpeakerError("pivot id '" + pivot_id + "' is not a speaker");

  SpeakerFactorization f;
  f.rank = r;
  f.content_dim = d;
  f.sigma = full.sigma.head(r);
  f.speaker_ids = std::move(speaker_ids);
  f.pivot_id = std::move(pivot_id);
  const double tol = static_cast<double>(std::max(rows, cols)) *
                     std::numeric_limits<double>::epsilon();
  f.effective_rank = f.sigma[0] > 0.0 ? numerical_rank(f.sigma, tol) : 0;
  f.speaker_maps.reserve(static_cast<std::size_t>(k_speakers));
  for (Index k = 0; k < k_speakers; ++k)
    f.speaker_maps.emplace_back(full.vt.block(0, k * d, r, d));
  return f;
}

SpeakerFactorization factorize(const Matrix &block,
                               std::vector<std::string> speaker_ids, Index d,
                               Index r, std::string pivot_id) {
  const Index max_rank = std::min(block.rows(), block.cols());
  if (r < 1 || r > max_rank)
    throw ParameterError("factorize: rank " + std::to_string(r) +
                         " outside [1, " + std::to_string(max_rank) + "]");
  return factorize_from_svd(svd(block), block.rows(), std::move(speaker_ids), d,
                            r, std::move(pivot_id));
}

Matrix content_codes(const SpeakerFactorization &f, const Matrix &block) {
  if (block.cols() != f.content_dim * f.speaker_count())
    throw ShapeError("content_codes: block width disagrees with factorization");
  return block * f.stacked_maps().transpose();
}

double reconstruction_error(const SpeakerFactorization &f, const Matrix &block) {
  const Matrix s = f.stacked_maps();
  const Matrix c = content_codes(f, block);
  return (block - c * s).squaredNorm();
}

Matrix conversion_map(const SpeakerFactorization &f, std::string_view src,
                      std::string_view tgt, double rcond) {
  const Matrix &s_src = f.speaker_map(src);
  const Matrix &s_tgt = f.speaker_map(tgt);
  return pinv(s_src, rcond) * s_tgt;
}

FeatureMatrix convert(const SpeakerFactorization &f, const FeatureMatrix &x_src,
                      std::string_view src, std::string_view tgt,
                      double rcond) {
  if (x_src.cols() != f.content_dim)
    throw ShapeError("convert: input has " + std::to_string(x_src.cols()) +
                     " columns, factorization content_dim is " +
                     std::to_string(f.content_dim));
  const Matrix &s_src = f.speaker_map(src);
  const Matrix &s_tgt = f.speaker_map(tgt);
  // (x S_src^+) S_tgt keeps the intermediate at N x r.
  const Matrix content = x_src.values() * pinv(s_src, rcond);
  return FeatureMatrix(content * s_tgt);
}

std::vector<SweepRow> rank_sweep(const Matrix &block,
                                 std::vector<std::string> speaker_ids, Index d,
                                 std::span<const Index> ranks,
                                 const EvalHook &hook, std::string pivot_id,
                                 unsigned threads) {
  if (ranks.empty()) throw ParameterError("rank_sweep: no ranks given");
  const Index max_rank = std::min(block.rows(), block.cols());
  for (Index r : ranks)
    if (r < 1 || r > max_rank)
      throw ParameterError("rank_sweep: rank " + std::to_string(r) +
                           " outside [1, " + std::to_string(max_rank) + "]");
  const SvdResult full = svd(block);
  const double total = block.squaredNorm();

  std::vector<std::vector<SweepRow>> per_rank(ranks.size());
  parallel_for(ranks.size(), std::max(threads, 1u),
               [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Index r = ranks[i];
      const SpeakerFactorization f = factorize_from_svd(
          full, block.rows(), speaker_ids, d, r, pivot_id);
      const double err = reconstruction_error(f, block);
      per_rank[i].push_back(
          {r, "relative_reconstruction_error",
           total > 0.0 ? std::sqrt(err / total) : 0.0});
      per_rank[i].push_back(
          {r, "effective_rank", static_cast<double>(f.effective_rank)});
      if (hook)
        for (auto &[name, value] : hook(f, block))
          per_rank[i].push_back({r, name, value});
    }
  });

  std::vector<SweepRow> rows;
  for (auto &v : per_rank)
    for (auto &row : v) rows.push_back(std::move(row));
  return rows;
}

std::vector<SweepRow> rank_sweep(std::span<const FeatureMatrix> speakers,
                                 std::vector<std::string> speaker_ids,
                                 Index pivot, std::span<const Index> ranks,
                                 const EvalHook &hook, Index k_match,
                                 unsigned threads) {
  if (speaker_ids.size() != speakers.size())
    throw ParameterError("rank_sweep: speaker id count differs from matrices");
  const BlockAssembly a = assemble_block(speakers, pivot, k_match, threads);
  std::string pivot_id = speaker_ids[static_cast<std::size_t>(pivot)];
  return rank_sweep(a.block, std::move(speaker_ids), speakers[0].cols(), ranks,
                    hook, std::move(pivot_id), threads);
}

std::string sweep_csv(std::span<const SweepRow> rows) {
  std::string out = "rank,metric_name,value\n";
  char buf[64];
  for (const auto &row : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", row.value);
    out += std::to_string(row.rank) + "," + row.metric + "," + buf + "\n";
  }
  return out;
}

void save_factorization(const SpeakerFactorization &f,
                        const std::filesystem::path &dir) {
  check_ids(f.speaker_ids);
  std::filesystem::create_directories(dir);
  write_matrix(FeatureMatrix(Matrix(f.sigma.transpose())), dir / "sigma.lvcf");
  std::string ids;
  for (Index k = 0; k < f.speaker_count(); ++k) {
    write_matrix(FeatureMatrix(f.speaker_maps[k]),
                 dir / ("S_" + f.speaker_ids[k] + ".lvcf"));
    ids += (k ? "," : "") + f.speaker_ids[k];
  }
  write_manifest(dir / "manifest.txt",
                 {{"rank", std::to_string(f.rank)},
                  {"content_dim", std::to_string(f.content_dim)},
                  {"k_speakers", std::to_string(f.speaker_count())},
                  {"pivot", f.pivot_id},
                  {"speaker_ids", ids},
                  {"effective_rank", std::to_string(f.effective_rank)}});
}

SpeakerFactorization load_factorization(const std::filesystem::path &dir) {
  const auto mpath = dir / "manifest.txt";
  const Manifest mf = read_manifest(mpath);
  SpeakerFactorization f;
  f.rank = std::stoll(manifest_get(mf, "rank", mpath));
  f.content_dim = std::stoll(manifest_get(mf, "content_dim", mpath));
  f.pivot_id = manifest_get(mf, "pivot", mpath);
  f.speaker_ids = split(manifest_get(mf, "speaker_ids", mpath), ',');
  f.effective_rank = std::stoll(manifest_get(mf, "effective_rank", mpath));
  const auto k_declared = std::stoll(manifest_get(mf, "k_speakers", mpath));
  check_ids(f.speaker_ids);
  if (k_declared != f.speaker_count())
    throw ConsistencyError(mpath.string() + ": k_speakers disagrees with ids");

  const FeatureMatrix sigma = read_matrix(dir / "sigma.lvcf");
  if (sigma.rows() != 1 || sigma.cols() != f.rank)
    throw ConsistencyError(dir.string() + ": sigma.lvcf is not 1 x rank");
  f.sigma = sigma.values().row(0).transpose();
  for (const auto &id : f.speaker_ids) {
    Matrix s = read_matrix(dir / ("S_" + id + ".lvcf")).values();
    if (s.rows() != f.rank || s.cols() != f.content_dim)
      throw ConsistencyError(dir.string() + ": S_" + id +
                             ".lvcf is not rank x content_dim");
    f.speaker_maps.push_back(std::move(s));
  }
  return f;
}

}  // namespace linearvc
