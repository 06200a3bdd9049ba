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

// Synthetic multi-speaker features with a planted shared content subspace.
//
// Content is drawn as Gaussian clusters (one per content class) in r_true
// dimensions and shared by every speaker, frame for frame.  Speaker k renders
// content c as c T_k + b_k (+ noise), where T_k is an r_true x d embedding.
// The orthogonal family uses orthonormal-row T_k and b_k = 0; the affine
// family mixes the embedding with a random well-conditioned r_true x r_true
// matrix and adds a random offset.

#ifndef LINEARVC_SYNTH_HPP_
#define LINEARVC_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "linearvc/tensor_io.hpp"
#include "linearvc/transforms.hpp"

namespace linearvc {

enum class TransformFamily { kOrthogonal, kAffine };

std::string_view to_string(TransformFamily family);
TransformFamily parse_transform_family(std::string_view name);

struct SynthSpec {
  Index n_frames = 2000;
  Index d = 64;
  Index r_true = 8;
  Index k_speakers = 4;
  Index n_content_classes = 20;
  double noise_sigma = 0.01;
  TransformFamily transform_family = TransformFamily::kOrthogonal;
  std::uint64_t seed = 17;

  // Plant geometry.
  double centroid_scale = 3.0;   // std of class centroids
  double cluster_spread = 0.3;   // within-class std
  double mixing_strength = 0.5;  // affine family: off-identity mixing scale
  double bias_scale = 3.0;       // affine family: expected |b_k|
  /// 1 draws every speaker's embedding independently; smaller values blend
  /// in a shared embedding so speakers' content subspaces overlap (0 = same
  /// subspace for everyone).
  double speaker_spread = 1.0;

  /// Throws ParameterError on an invalid combination.
  void validate() const;
};

struct SynthTruth {
  Matrix content_points;                // N x r_true
  std::vector<Index> content_labels;    // N
  Matrix class_centroids;               // classes x r_true
  std::vector<Matrix> speaker_transforms;  // K, r_true x d
  std::vector<Vector> speaker_biases;      // K, d

  Index speakers() const { return static_cast<Index>(speaker_transforms.size()); }
  Index classes() const { return class_centroids.rows(); }
  /// Noiseless frames of speaker k for the given content rows (all rows when
  /// `rows` is empty).
  Matrix render(Index k, std::span<const Index> rows = {}) const;
  /// Class centroids as rendered by speaker k (classes x d).
  Matrix rendered_centroids(Index k) const;
};

struct SynthData {
  std::vector<FeatureMatrix> speakers;  // K matrices, N x d, frame-aligned
  SynthTruth truth;
};

SynthData generate(const SynthSpec &spec);

/// Fraction of frames whose nearest rendered class centroid (target speaker
/// space) carries the frame's true label.  `rows[i]` is the content row of
/// converted frame i; empty means the identity 0..N-1.
double content_accuracy(const FeatureMatrix &converted, const SynthTruth &truth,
                        Index target_speaker, std::span<const Index> rows = {});

/// Cosine similarity between the column mean of `converted` and the column
/// mean of the target's noiseless frames for the same content rows.  0 when
/// either mean is (numerically) zero.
double speaker_score(const FeatureMatrix &converted, const SynthTruth &truth,
                     Index target_speaker, std::span<const Index> rows = {});

/// Writes speaker_<k>.lvcf, labels.lvcf (N x 1), content.lvcf, centroids.lvcf,
/// T_<k>.lvcf, b_<k>.lvcf (1 x d) and manifest.txt into `dir`.
void save_synth(const SynthData &data, const SynthSpec &spec,
                const std::filesystem::path &dir);
SynthTruth load_truth(const std::filesystem::path &dir);

// ---------------------------------------------------------------------------
// Experiment harnesses over synthetic plants.  Frames are split in half:
// maps are fitted on the first half and evaluated on the second.  An
// evaluation "utterance" is the set of held-out frames of one content class.
// ---------------------------------------------------------------------------

struct FamilyScores {
  double bias_only = 0.0;
  double orthogonal = 0.0;
  double orthogonal_bias = 0.0;
  double unconstrained = 0.0;
  double unconstrained_bias = 0.0;
  double unconverted = 0.0;  // source frames scored against the target
  double self = 0.0;         // source frames scored against their own speaker
};

/// Mean speaker_score over all ordered speaker pairs and utterances for each
/// transform family, and mean content_accuracy likewise.
struct FamilyEvaluation {
  FamilyScores speaker;
  FamilyScores content;
};

FamilyEvaluation evaluate_transform_families(const SynthSpec &spec);

struct RankPoint {
  Index rank = 0;
  double content_accuracy = 0.0;
  double speaker_score = 0.0;
  double relative_error = 0.0;
};

/// Factorises the aligned training block once and, for every rank, converts
/// held-out frames between all ordered speaker pairs.
std::vector<RankPoint> evaluate_rank_trend(const SynthSpec &spec,
                                           std::span<const Index> ranks);

}  // namespace linearvc

#endif  // LINEARVC_SYNTH_HPP_
