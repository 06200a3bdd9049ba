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

#include "linearvc/matching.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "linearvc/errors.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

namespace {

// Fixed summation order (four interleaved partial sums) so that every caller
// gets bit-identical distances for the same pair of rows.
double dot(const double *a, const double *b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double norm(const double *a, std::size_t n) { return std::sqrt(dot(a, a, n)); }

double distance_from_parts(double ab, double na, double nb) {
  if (na < kZeroNormThreshold || nb < kZeroNormThreshold) return 1.0;
  return std::clamp(1.0 - ab / (na * nb), 0.0, 2.0);
}

}  // namespace

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("cosine_distance: dimension mismatch (" +
                     std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  const std::size_t n = a.size();
  return distance_from_parts(dot(a.data(), b.data(), n), norm(a.data(), n),
                             norm(b.data(), n));
}

MatchedPairs match_frames(const FeatureMatrix &source,
                          const FeatureMatrix &target, Index k,
                          unsigned threads) {
  if (source.cols() != target.cols())
    throw ShapeError("match_frames: source has " +
                     std::to_string(source.cols()) + " columns, target has " +
                     std::to_string(target.cols()));
  if (k < 1 || k > target.rows())
    throw ParameterError("match_frames: k = " + std::to_string(k) +
                         " outside [1, " + std::to_string(target.rows()) + "]");

  const Matrix &src = source.values();
  const Matrix &tgt = target.values();
  const auto d = static_cast<std::size_t>(src.cols());
  const Index n = src.rows();
  const Index m = tgt.rows();

  std::vector<double> tgt_norm(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) tgt_norm[j] = norm(tgt.data() + j * d, d);

  MatchedPairs out;
  out.k = k;
  const auto total = static_cast<std::size_t>(n * k);
  out.source_indices.resize(total);
  out.target_indices.resize(total);
  out.distances.resize(total);

  parallel_for(static_cast<std::size_t>(n), threads,
               [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<double, Index>> scratch;
    if (k > 1) scratch.resize(static_cast<std::size_t>(m));
    for (std::size_t i = begin; i < end; ++i) {
      const double *a = src.data() + i * d;
      const double na = norm(a, d);
      const std::size_t base = i * static_cast<std::size_t>(k);
      if (k == 1) {
        Index best = 0;
        double best_d = distance_from_parts(dot(a, tgt.data(), d), na, tgt_norm[0]);
        for (Index j = 1; j < m; ++j) {
          const double dist =
              distance_from_parts(dot(a, tgt.data() + j * d, d), na, tgt_norm[j]);
          if (dist < best_d) {
            best_d = dist;
            best = j;
          }
        }
        out.source_indices[base] = static_cast<Index>(i);
        out.target_indices[base] = best;
        out.distances[base] = best_d;
        continue;
      }
      for (Index j = 0; j < m; ++j)
        scratch[j] = {distance_from_parts(dot(a, tgt.data() + j * d, d), na,
                                          tgt_norm[j]),
                      j};
      std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
      for (Index j = 0; j < k; ++j) {
        out.source_indices[base + j] = static_cast<Index>(i);
        out.target_indices[base + j] = scratch[j].second;
        out.distances[base + j] = scratch[j].first;
      }
    }
  });
  return out;
}

FeatureMatrix gather_targets(const MatchedPairs &pairs,
                             const FeatureMatrix &target) {
  if (pairs.k < 1 || pairs.size() == 0 ||
      pairs.size() % static_cast<std::size_t>(pairs.k) != 0 ||
      pairs.target_indices.size() != pairs.size())
    throw ConsistencyError("gather_targets: malformed MatchedPairs record");
  const Index n = pairs.source_frames();
  Matrix out = Matrix::Zero(n, target.cols());
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    const Index j = pairs.target_indices[e];
    if (j < 0 || j >= target.rows())
      throw ConsistencyError("gather_targets: target index " +
                             std::to_string(j) + " out of range for " +
                             std::to_string(target.rows()) + " rows");
    out.row(static_cast<Index>(e) / pairs.k) += target.values().row(j);
  }
  if (pairs.k > 1) out /= static_cast<double>(pairs.k);
  return FeatureMatrix(std::move(out));
}

FeatureMatrix pairs_to_matrix(const MatchedPairs &pairs) {
  Matrix m(static_cast<Index>(pairs.size()), 3);
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    m(e, 0) = static_cast<double>(pairs.source_indices[e]);
    m(e, 1) = static_cast<double>(pairs.target_indices[e]);
    m(e, 2) = pairs.distances[e];
  }
  return FeatureMatrix(std::move(m));
}

MatchedPairs pairs_from_matrix(const FeatureMatrix &m, Index k) {
  if (m.cols() != 3 || k < 1 || m.rows() % k != 0)
    throw ShapeError("pairs_from_matrix: expected an (N*k) x 3 matrix");
  MatchedPairs p;
  p.k = k;
  for (Index e = 0; e < m.rows(); ++e) {
    const double s = m(e, 0), t = m(e, 1);
    if (s < 0 || t < 0 || s != std::floor(s) || t != std::floor(t))
      throw ConsistencyError("pairs_from_matrix: row " + std::to_string(e) +
                             " holds a non-integral index");
    p.source_indices.push_back(static_cast<Index>(s));
    p.target_indices.push_back(static_cast<Index>(t));
    p.distances.push_back(m(e, 2));
  }
  return p;
}

}  // namespace linearvc
