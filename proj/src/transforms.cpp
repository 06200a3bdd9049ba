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

#include "linearvc/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "linearvc/errors.hpp"
#include "linearvc/matching.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

std::string_view to_string(MapKind kind) {
  switch (kind) {
    case MapKind::kBiasOnly:
      return "bias_only";
    case MapKind::kOrthogonal:
      return "orthogonal";
    case MapKind::kUnconstrained:
      return "unconstrained";
  }
  return "unknown";
}

MapKind parse_map_kind(std::string_view name) {
  if (name == "bias_only" || name == "bias") return MapKind::kBiasOnly;
  if (name == "orthogonal") return MapKind::kOrthogonal;
  if (name == "unconstrained") return MapKind::kUnconstrained;
  throw ParameterError("unknown map kind '" + std::string(name) +
                       "' (expected bias, orthogonal or unconstrained)");
}

namespace {

// argmin over orthogonal W of ||y - x W||_F: W = U V^T where x^T y = U S V^T.
Matrix procrustes(const Matrix &x, const Matrix &y) {
  const SvdResult s = svd(x.transpose() * y);
  return s.u * s.vt;
}

// (x^T x + ridge I)^-1 x^T y through the SVD of x.
Matrix ridge_solve(const Matrix &x, const Matrix &y, double ridge) {
  const SvdResult s = svd(x);
  Vector shrink(s.sigma.size());
  for (Index i = 0; i < s.sigma.size(); ++i)
    shrink[i] = s.sigma[i] / (s.sigma[i] * s.sigma[i] + ridge);
  return s.vt.transpose() * (shrink.asDiagonal() * (s.u.transpose() * y));
}

}  // namespace

LinearMap fit(const FeatureMatrix &x, const FeatureMatrix &y, MapKind kind,
              bool with_bias, const FitOptions &options) {
  if (x.rows() != y.rows() || x.cols() != y.cols())
    throw ShapeError("fit: x is " + std::to_string(x.rows()) + "x" +
                     std::to_string(x.cols()) + " but y is " +
                     std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
  if (!(options.ridge >= 0.0))
    throw ParameterError("fit: ridge must be non-negative");

  const Matrix &xv = x.values();
  const Matrix &yv = y.values();
  const Index d = xv.cols();
  const RowVector mean_x = xv.colwise().mean();
  const RowVector mean_y = yv.colwise().mean();

  LinearMap map;
  map.kind = kind;
  map.with_bias = with_bias || kind == MapKind::kBiasOnly;
  map.bias = Vector::Zero(d);

  switch (kind) {
    case MapKind::kBiasOnly:
      map.weight = Matrix::Identity(d, d);
      map.bias = (mean_y - mean_x).transpose();
      break;

    case MapKind::kOrthogonal:
      if (with_bias) {
        const Matrix xc = xv.rowwise() - mean_x;
        const Matrix yc = yv.rowwise() - mean_y;
        map.weight = procrustes(xc, yc);
        map.bias = (mean_y - mean_x * map.weight).transpose();
      } else {
        map.weight = procrustes(xv, yv);
      }
      break;

    case MapKind::kUnconstrained:
      if (with_bias && options.ridge == 0.0) {
        Matrix xa(xv.rows(), d + 1);
        xa.leftCols(d) = xv;
        xa.col(d).setOnes();
        const Matrix wa = lstsq(xa, yv, options.rcond);
        map.weight = wa.topRows(d);
        map.bias = wa.row(d).transpose();
      } else if (with_bias) {
        // An unpenalised bias under ridge is the centred solution.
        const Matrix xc = xv.rowwise() - mean_x;
        const Matrix yc = yv.rowwise() - mean_y;
        map.weight = ridge_solve(xc, yc, options.ridge);
        map.bias = (mean_y - mean_x * map.weight).transpose();
      } else if (options.ridge > 0.0) {
        map.weight = ridge_solve(xv, yv, options.ridge);
      } else {
        map.weight = lstsq(xv, yv, options.rcond);
      }
      break;
  }
  return map;
}

FeatureMatrix apply(const LinearMap &map, const FeatureMatrix &x) {
  if (x.cols() != map.fitted_dim())
    throw ShapeError("apply: input has " + std::to_string(x.cols()) +
                     " columns, map expects " +
                     std::to_string(map.fitted_dim()));
  Matrix out = x.values() * map.weight;
  out.rowwise() += map.bias.transpose();
  return FeatureMatrix(std::move(out));
}

double fit_error(const LinearMap &map, const FeatureMatrix &x,
                 const FeatureMatrix &y) {
  if (x.rows() != y.rows())
    throw ShapeError("fit_error: row count mismatch");
  return (y.values() - apply(map, x).values()).squaredNorm();
}

FeatureMatrix knn_convert(const FeatureMatrix &source,
                          const FeatureMatrix &target_pool, Index k,
                          unsigned threads) {
  return gather_targets(match_frames(source, target_pool, k, threads),
                        target_pool);
}

double default_viz_threshold(const LinearMap &map) {
  std::vector<double> mags(map.weight.data(),
                           map.weight.data() + map.weight.size());
  for (double &v : mags) v = std::abs(v);
  std::sort(mags.begin(), mags.end());
  const double pos = 0.99 * static_cast<double>(mags.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, mags.size() - 1);
  return mags[lo] + (pos - static_cast<double>(lo)) * (mags[hi] - mags[lo]);
}

BinaryImage export_viz(const LinearMap &map, double threshold, Index max_dims) {
  if (std::isnan(threshold))
    throw ParameterError("export_viz: threshold is NaN");
  if (max_dims < 1 || max_dims > map.fitted_dim())
    throw ParameterError("export_viz: max_dims = " + std::to_string(max_dims) +
                         " outside [1, " + std::to_string(map.fitted_dim()) +
                         "]");
  BinaryImage img;
  img.width = img.height = max_dims;
  img.pixels.resize(static_cast<std::size_t>(max_dims * max_dims));
  for (Index i = 0; i < max_dims; ++i)
    for (Index j = 0; j < max_dims; ++j)
      img.pixels[i * max_dims + j] =
          std::abs(map.weight(i, j)) >= threshold ? 255 : 0;
  return img;
}

std::string encode_pgm(const BinaryImage &image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const BinaryImage &image, const std::filesystem::path &path) {
  write_file_atomic(path, encode_pgm(image));
}

void save_map(const LinearMap &map, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  write_matrix(FeatureMatrix(map.weight), dir / "weight.lvcf");
  write_matrix(FeatureMatrix(Matrix(map.bias.transpose())), dir / "bias.lvcf");
  write_manifest(dir / "manifest.txt",
                 {{"kind", std::string(to_string(map.kind))},
                  {"fitted_dim", std::to_string(map.fitted_dim())},
                  {"with_bias", map.with_bias ? "1" : "0"}});
}

LinearMap load_map(const std::filesystem::path &dir) {
  const auto manifest_path = dir / "manifest.txt";
  const Manifest mf = read_manifest(manifest_path);
  LinearMap map;
  map.kind = parse_map_kind(manifest_get(mf, "kind", manifest_path));
  const Index d = std::stoll(manifest_get(mf, "fitted_dim", manifest_path));
  const auto wb = mf.find("with_bias");
  map.with_bias = wb != mf.end() && wb->second == "1";
  map.weight = read_matrix(dir / "weight.lvcf").values();
  const FeatureMatrix bias = read_matrix(dir / "bias.lvcf");
  if (map.weight.rows() != d || map.weight.cols() != d || bias.rows() != 1 ||
      bias.cols() != d)
    throw ConsistencyError(dir.string() +
                           ": weight/bias shapes disagree with fitted_dim " +
                           std::to_string(d));
  map.bias = bias.values().row(0).transpose();
  return map;
}

}  // namespace linearvc
