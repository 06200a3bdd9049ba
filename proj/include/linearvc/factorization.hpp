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

// Shared-content / speaker-map factorisation.
//
// K speakers' frames are aligned to a pivot speaker and concatenated along
// the feature axis into an N x (K*D) block X = [X_1 | ... | X_K].  A rank-r
// truncated SVD X ~= U diag(sigma) V^T gives shared content C = U diag(sigma)
// (N x r) and one r x D map per speaker, S_k = the k-th D-column block of
// V^T, so that X_k ~= C S_k.  Conversion projects into content space with
// the pseudoinverse of the source map and out through the target map:
// X_src S_src^+ S_tgt.

#ifndef LINEARVC_FACTORIZATION_HPP_
#define LINEARVC_FACTORIZATION_HPP_

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "linearvc/matching.hpp"
#include "linearvc/tensor_io.hpp"

namespace linearvc {

inline constexpr Index kDefaultRank = 100;
inline constexpr double kDefaultConvertRcond = 1e-10;

struct BlockAssembly {
  Matrix block;                         // N x (K*D)
  std::vector<MatchedPairs> alignments;  // per speaker, pivot -> speaker
  Index pivot = 0;
};

/// Aligns every speaker to the pivot's frames by cosine nearest neighbours
/// (k-mean pooled) and concatenates the aligned matrices.  The pivot block
/// holds the pivot frames themselves.
BlockAssembly assemble_block(std::span<const FeatureMatrix> speakers,
                             Index pivot, Index k_match = 1,
                             unsigned threads = 0);

/// Horizontal concatenation of already frame-aligned speaker matrices.
Matrix stack_aligned(std::span<const FeatureMatrix> speakers);

struct SpeakerFactorization {
  Index rank = 0;
  std::vector<std::string> speaker_ids;
  Vector sigma;                     // rank, descending
  std::vector<Matrix> speaker_maps;  // K matrices, rank x content_dim
  Index content_dim = 0;
  std::string pivot_id;
  /// Singular values above max(N, K*D) * eps * sigma_max among the retained
  /// ones.  Below `rank` when the block has fewer non-zero singular values.
  Index effective_rank = 0;

  Index speaker_count() const { return static_cast<Index>(speaker_ids.size()); }
  Index speaker_index(std::string_view id) const;
  const Matrix &speaker_map(std::string_view id) const {
    return speaker_maps[speaker_index(id)];
  }
  /// [S_1 | ... | S_K], rank x (K*D).
  Matrix stacked_maps() const;
};

/// Lexicographically smallest id.
std::string default_pivot(std::span<const std::string> ids);

/// Rank-r factorisation of `block`, whose columns are ids.size() blocks of
/// width d.  An empty pivot_id selects default_pivot(ids).
SpeakerFactorization factorize(const Matrix &block,
                               std::vector<std::string> speaker_ids, Index d,
                               Index r, std::string pivot_id = {});

/// Same as factorize, reusing a full SVD of the block.
SpeakerFactorization factorize_from_svd(const SvdResult &full, Index rows,
                                        std::vector<std::string> speaker_ids,
                                        Index d, Index r,
                                        std::string pivot_id = {});

/// C = X S^T, which equals U diag(sigma) for the block the factorisation was
/// fitted on.
Matrix content_codes(const SpeakerFactorization &f, const Matrix &block);

/// sum_k ||X_k - C S_k||_F^2 with C = content_codes(f, block).
double reconstruction_error(const SpeakerFactorization &f, const Matrix &block);

/// S_src^+ S_tgt, a D x D map of rank <= f.rank.
Matrix conversion_map(const SpeakerFactorization &f, std::string_view src,
                      std::string_view tgt,
                      double rcond = kDefaultConvertRcond);

FeatureMatrix convert(const SpeakerFactorization &f, const FeatureMatrix &x_src,
                      std::string_view src, std::string_view tgt,
                      double rcond = kDefaultConvertRcond);

struct SweepRow {
  Index rank = 0;
  std::string metric;
  double value = 0.0;
};

using Metrics = std::vector<std::pair<std::string, double>>;
/// Called once per rank with the truncated factorisation and the block.
using EvalHook =
    std::function<Metrics(const SpeakerFactorization &, const Matrix &block)>;

/// Factorises `block` once and evaluates every requested rank.  Every row
/// carries "relative_reconstruction_error"; `hook` (optional) adds more.
/// `threads` > 1 evaluates ranks concurrently; row order follows `ranks`.
std::vector<SweepRow> rank_sweep(const Matrix &block,
                                 std::vector<std::string> speaker_ids, Index d,
                                 std::span<const Index> ranks,
                                 const EvalHook &hook = {},
                                 std::string pivot_id = {},
                                 unsigned threads = 1);

/// Assembles the block from raw speaker matrices (see assemble_block), then
/// sweeps.
std::vector<SweepRow> rank_sweep(std::span<const FeatureMatrix> speakers,
                                 std::vector<std::string> speaker_ids,
                                 Index pivot, std::span<const Index> ranks,
                                 const EvalHook &hook = {}, Index k_match = 1,
                                 unsigned threads = 1);

/// "rank,metric_name,value" CSV with a header line.
std::string sweep_csv(std::span<const SweepRow> rows);

/// Directory: sigma.lvcf (1 x r), S_<id>.lvcf per speaker, manifest.txt.
void save_factorization(const SpeakerFactorization &f,
                        const std::filesystem::path &dir);
SpeakerFactorization load_factorization(const std::filesystem::path &dir);

}  // namespace linearvc

#endif  // LINEARVC_FACTORIZATION_HPP_
