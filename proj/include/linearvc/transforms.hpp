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

#ifndef LINEARVC_TRANSFORMS_HPP_
#define LINEARVC_TRANSFORMS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "linearvc/tensor_io.hpp"

namespace linearvc {

enum class MapKind { kBiasOnly, kOrthogonal, kUnconstrained };

std::string_view to_string(MapKind kind);
/// Accepts "bias_only"/"bias", "orthogonal", "unconstrained".
MapKind parse_map_kind(std::string_view name);

/**
   A fitted frame-wise affine map: out = x * weight + 1 * bias^T.

   bias_only maps carry an exact identity weight.  Orthogonal maps carry an
   orthogonal weight (rotations and reflections).  Unconstrained maps carry
   the least-squares weight.
*/
struct LinearMap {
  MapKind kind = MapKind::kUnconstrained;
  Matrix weight;  // D x D
  Vector bias;    // D, zero when fitted without bias
  bool with_bias = false;

  Index fitted_dim() const { return weight.rows(); }
};

struct FitOptions {
  /// Ridge penalty on the unconstrained weight.  0 gives plain least squares.
  double ridge = 0.0;
  std::optional<double> rcond;
};

/// Fits a map sending rows of x onto the corresponding rows of y in the
/// Frobenius sense.  `with_bias` is ignored for kBiasOnly (always biased).
LinearMap fit(const FeatureMatrix &x, const FeatureMatrix &y, MapKind kind,
              bool with_bias, const FitOptions &options = {});

FeatureMatrix apply(const LinearMap &map, const FeatureMatrix &x);

/// ||y - apply(map, x)||_F^2.
double fit_error(const LinearMap &map, const FeatureMatrix &x,
                 const FeatureMatrix &y);

/// kNN baseline: each output row is the mean of the k nearest pool rows
/// (cosine distance, lowest index wins ties).
FeatureMatrix knn_convert(const FeatureMatrix &source,
                          const FeatureMatrix &target_pool, Index k = 4,
                          unsigned threads = 0);

/// Row-major 8-bit greyscale image.
struct BinaryImage {
  Index width = 0;
  Index height = 0;
  std::vector<std::uint8_t> pixels;  // 0 or 255

  bool at(Index row, Index col) const {
    return pixels[static_cast<std::size_t>(row * width + col)] != 0;
  }
};

/// 99th percentile of |weight| (linear interpolation between order
/// statistics), the default binarisation threshold.
double default_viz_threshold(const LinearMap &map);

/// Pixel (i, j) is set iff |weight(i, j)| >= threshold, over the leading
/// max_dims x max_dims block.
BinaryImage export_viz(const LinearMap &map, double threshold, Index max_dims);

/// Binary PGM (P5, maxval 255).
std::string encode_pgm(const BinaryImage &image);
void write_pgm(const BinaryImage &image, const std::filesystem::path &path);

/// Directory layout: weight.lvcf (D x D), bias.lvcf (1 x D), manifest.txt.
void save_map(const LinearMap &map, const std::filesystem::path &dir);
LinearMap load_map(const std::filesystem::path &dir);

}  // namespace linearvc

#endif  // LINEARVC_TRANSFORMS_HPP_
