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

#ifndef LINEARVC_TENSOR_IO_HPP_
#define LINEARVC_TENSOR_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace linearvc {

using Index = Eigen::Index;
/// Dense double-precision matrix, row-major so rows are contiguous frames.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/**
   An N x D matrix of per-frame features: one row per frame, one column per
   feature dimension.  Values are held in double precision; on disk they are
   stored as binary32 (see read_matrix / write_matrix).

   Invariants checked on construction: rows >= 1, cols >= 1 and every value
   is finite.  The object is immutable afterwards.
*/
class FeatureMatrix {
 public:
  explicit FeatureMatrix(Matrix values);
  FeatureMatrix(std::initializer_list<std::initializer_list<double>> rows);

  Index rows() const { return values_.rows(); }
  Index cols() const { return values_.cols(); }
  const Matrix &values() const { return values_; }
  double operator()(Index r, Index c) const { return values_(r, c); }
  auto row(Index r) const { return values_.row(r); }

  friend bool operator==(const FeatureMatrix &a, const FeatureMatrix &b) {
    return a.values_.rows() == b.values_.rows() &&
           a.values_.cols() == b.values_.cols() && a.values_ == b.values_;
  }

 private:
  Matrix values_;
};

/// Throws InvalidMatrixError when `m` is empty or holds a NaN/Inf.
void require_valid(const Matrix &m, const char *what);

// ---------------------------------------------------------------------------
// LVCF on-disk format.
//
//   0..3    magic "LVCF"
//   4       version (1)
//   5       dtype (1 = IEEE-754 binary32)
//   6..7    reserved, zero
//   8..15   rows, u64 little-endian
//   16..23  cols, u64 little-endian
//   24..    rows*cols binary32 little-endian, row-major
// ---------------------------------------------------------------------------

inline constexpr std::uint8_t kLvcfVersion = 1;
inline constexpr std::uint8_t kLvcfDtypeF32 = 1;
inline constexpr std::uint64_t kLvcfHeaderBytes = 24;

FeatureMatrix read_matrix(const std::filesystem::path &path);

/// Writes atomically (temporary file + rename).  Values are narrowed to
/// binary32; a value that overflows binary32 is rejected.
void write_matrix(const FeatureMatrix &m, const std::filesystem::path &path);

/// Encodes/decodes the LVCF byte image directly, without touching disk.
std::string encode_lvcf(const FeatureMatrix &m);
FeatureMatrix decode_lvcf(std::string_view bytes);

// ---------------------------------------------------------------------------
// Decompositions.
// ---------------------------------------------------------------------------

/// Thin SVD truncated to k terms: a ~= u * diag(sigma) * vt.
struct SvdResult {
  Matrix u;      // N x k, orthonormal columns
  Vector sigma;  // k, descending, non-negative
  Matrix vt;     // k x D, orthonormal rows

  Index rank() const { return sigma.size(); }
  Matrix reconstruct() const;
};

/// Full thin SVD (k = min(N, D)).
SvdResult svd(const Matrix &a);
/// Keeps the k largest singular triplets.  Requires 1 <= k <= min(N, D).
SvdResult svd(const Matrix &a, Index k);

/// max(N, D) * eps, the default relative cutoff for pinv/lstsq.
double default_rcond(Index rows, Index cols);

/// Moore-Penrose pseudoinverse; singular values below rcond * sigma_max are
/// treated as zero.  An absent rcond selects default_rcond; a negative or
/// NaN rcond is a ParameterError.
Matrix pinv(const Matrix &a, std::optional<double> rcond = std::nullopt);

/// Minimum-norm minimiser of ||y - x w||_F, computed as pinv(x) * y.
Matrix lstsq(const Matrix &x, const Matrix &y,
             std::optional<double> rcond = std::nullopt);

/// Number of singular values above rcond * sigma_max.
Index numerical_rank(const Vector &sigma, double rcond);

}  // namespace linearvc

#endif  // LINEARVC_TENSOR_IO_HPP_
