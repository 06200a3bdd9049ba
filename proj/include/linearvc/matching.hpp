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

#ifndef LINEARVC_MATCHING_HPP_
#define LINEARVC_MATCHING_HPP_

#include <span>
#include <vector>

#include "linearvc/tensor_io.hpp"

namespace linearvc {

/// Norms below this count as zero; such frames are at distance 1 from
/// everything.
inline constexpr double kZeroNormThreshold = 1e-12;

/// 1 - a.b / (|a| |b|), clamped to [0, 2].
double cosine_distance(std::span<const double> a, std::span<const double> b);

inline std::span<const double> row_span(const Matrix &m, Index r) {
  return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

/**
   Nearest-neighbour pairing of source frames with target frames.

   Entries are grouped per source frame: entry `i * k + j` holds the j-th
   nearest target frame of source frame `i` (ascending distance, ties broken by
   the lower target index).
*/
struct MatchedPairs {
  Index k = 1;
  std::vector<Index> source_indices;
  std::vector<Index> target_indices;
  std::vector<double> distances;

  std::size_t size() const { return source_indices.size(); }
  Index source_frames() const {
    return static_cast<Index>(source_indices.size()) / k;
  }
  friend bool operator==(const MatchedPairs &, const MatchedPairs &) = default;
};

/// Exhaustive cosine nearest-neighbour search.  `threads` = 0 uses every
/// core; the result does not depend on the thread count.
MatchedPairs match_frames(const FeatureMatrix &source,
                          const FeatureMatrix &target, Index k = 1,
                          unsigned threads = 0);

/// Row i of the result is the mean of the k target rows matched to source
/// frame i.
FeatureMatrix gather_targets(const MatchedPairs &pairs,
                             const FeatureMatrix &target);

/// (source index, target index, distance) per row, for debugging dumps.
FeatureMatrix pairs_to_matrix(const MatchedPairs &pairs);
MatchedPairs pairs_from_matrix(const FeatureMatrix &m, Index k);

}  // namespace linearvc

#endif  // LINEARVC_MATCHING_HPP_
