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

#include "linearvc/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "linearvc/errors.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

namespace {

constexpr char kMagic[4] = {'L', 'V', 'C', 'F'};

void put_u64(std::string &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(std::string_view bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + i]))
         << (8 * i);
  return v;
}

void put_f32(std::string &out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

float get_f32(std::string_view bytes, std::size_t at) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i)
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i]))
            << (8 * i);
  return std::bit_cast<float>(bits);
}

}  // namespace

void require_valid(const Matrix &m, const char *what) {
  if (m.rows() < 1 || m.cols() < 1) {
    std::ostringstream os;
    os << what << ": matrix must have at least one row and one column, got "
       << m.rows() << "x" << m.cols();
    throw InvalidMatrixError(os.str());
  }
  if (!m.allFinite()) {
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c)
        if (!std::isfinite(m(r, c))) {
          std::ostringstream os;
          os << what << ": non-finite value at (" << r << ", " << c << ")";
          throw InvalidMatrixError(os.str());
        }
  }
}

FeatureMatrix::FeatureMatrix(Matrix values) : values_(std::move(values)) {
  require_valid(values_, "FeatureMatrix");
}

FeatureMatrix::FeatureMatrix(
    std::initializer_list<std::initializer_list<double>> rows)
    : FeatureMatrix([&] {
        const auto n = static_cast<Index>(rows.size());
        const auto d = n ? static_cast<Index>(rows.begin()->size()) : 0;
        Matrix m(n, d);
        Index r = 0;
        for (const auto &row : rows) {
          if (static_cast<Index>(row.size()) != d)
            throw ShapeError("FeatureMatrix: ragged initializer list");
          Index c = 0;
          for (double v : row) m(r, c++) = v;
          ++r;
        }
        return m;
      }()) {}

std::string encode_lvcf(const FeatureMatrix &m) {
  const Matrix &v = m.values();
  std::string out;
  out.reserve(kLvcfHeaderBytes + 4 * static_cast<std::size_t>(v.size()));
  out.append(kMagic, 4);
  out.push_back(static_cast<char>(kLvcfVersion));
  out.push_back(static_cast<char>(kLvcfDtypeF32));
  out.push_back('\0');
  out.push_back('\0');
  put_u64(out, static_cast<std::uint64_t>(v.rows()));
  put_u64(out, static_cast<std::uint64_t>(v.cols()));
  for (Index r = 0; r < v.rows(); ++r)
    for (Index c = 0; c < v.cols(); ++c) {
      const auto f = static_cast<float>(v(r, c));
      if (!std::isfinite(f)) {
        std::ostringstream os;
        os << "value at (" << r << ", " << c << ") = " << v(r, c)
           << " is not representable as binary32";
        throw InvalidMatrixError(os.str());
      }
      put_f32(out, f);
    }
  return out;
}

FeatureMatrix decode_lvcf(std::string_view bytes) {
  if (bytes.size() < kLvcfHeaderBytes)
    throw LengthError("LVCF header truncated: expected " +
                          std::to_string(kLvcfHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()),
                      kLvcfHeaderBytes, bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad LVCF magic", 0);
  if (static_cast<std::uint8_t>(bytes[4]) != kLvcfVersion)
    throw FormatError("unsupported LVCF version " +
                          std::to_string(static_cast<unsigned char>(bytes[4])),
                      4);
  if (static_cast<std::uint8_t>(bytes[5]) != kLvcfDtypeF32)
    throw FormatError("unsupported LVCF dtype " +
                          std::to_string(static_cast<unsigned char>(bytes[5])),
                      5);
  for (std::size_t i = 6; i < 8; ++i)
    if (bytes[i] != '\0') throw FormatError("reserved LVCF byte is not zero", i);

  const std::uint64_t rows = get_u64(bytes, 8);
  const std::uint64_t cols = get_u64(bytes, 16);
  if (rows == 0) throw FormatError("LVCF row count is zero", 8);
  if (cols == 0) throw FormatError("LVCF column count is zero", 16);
  constexpr std::uint64_t kMaxElems = (std::uint64_t{1} << 60) / 4;
  if (rows > kMaxElems / cols)
    throw FormatError("LVCF dimensions overflow", 8);

  const std::uint64_t payload = 4 * rows * cols;
  const std::uint64_t have = bytes.size() - kLvcfHeaderBytes;
  if (have < payload)
    throw LengthError("LVCF payload truncated: expected " +
                          std::to_string(payload) + " bytes for a " +
                          std::to_string(rows) + "x" + std::to_string(cols) +
                          " binary32 matrix, got " + std::to_string(have),
                      payload, have);
  if (have > payload)
    throw FormatError("trailing bytes after LVCF payload",
                      kLvcfHeaderBytes + payload);

  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t at = kLvcfHeaderBytes;
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c, at += 4) {
      const float f = get_f32(bytes, at);
      if (!std::isfinite(f)) throw FormatError("non-finite LVCF value", at);
      m(r, c) = static_cast<double>(f);
    }
  return FeatureMatrix(std::move(m));
}

FeatureMatrix read_matrix(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  try {
    return decode_lvcf(bytes);
  } catch (const FormatError &e) {
    throw FormatError(path.string() + ": " + e.detail(), e.offset());
  } catch (const LengthError &e) {
    throw LengthError(path.string() + ": " + e.what(), e.expected(),
                      e.actual());
  }
}

void write_matrix(const FeatureMatrix &m, const std::filesystem::path &path) {
  write_file_atomic(path, encode_lvcf(m));
}

// ---------------------------------------------------------------------------

Matrix SvdResult::reconstruct() const {
  return u * sigma.asDiagonal() * vt;
}

SvdResult svd(const Matrix &a) {
  require_valid(a, "svd");
  Eigen::BDCSVD<Eigen::MatrixXd> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult out;
  out.u = dec.matrixU();
  out.sigma = dec.singularValues();
  out.vt = dec.matrixV().transpose();
  return out;
}

SvdResult svd(const Matrix &a, Index k) {
  const Index full = std::min(a.rows(), a.cols());
  if (k < 1 || k > full)
    throw ParameterError("svd: rank limit " + std::to_string(k) +
                         " outside [1, " + std::to_string(full) + "]");
  SvdResult out = svd(a);
  if (k == full) return out;
  out.u = out.u.leftCols(k).eval();
  out.sigma = out.sigma.head(k).eval();
  out.vt = out.vt.topRows(k).eval();
  return out;
}

double default_rcond(Index rows, Index cols) {
  return static_cast<double>(std::max(rows, cols)) *
         std::numeric_limits<double>::epsilon();
}

Index numerical_rank(const Vector &sigma, double rcond) {
  if (sigma.size() == 0) return 0;
  const double cutoff = rcond * sigma.maxCoeff();
  Index n = 0;
  for (Index i = 0; i < sigma.size(); ++i)
    if (sigma[i] > cutoff) ++n;
  return n;
}

namespace {

double resolve_rcond(const Matrix &a, std::optional<double> rcond) {
  if (!rcond) return default_rcond(a.rows(), a.cols());
  if (!(*rcond >= 0.0))
    throw ParameterError("rcond must be a non-negative number");
  return *rcond;
}

Vector inverse_spectrum(const Vector &sigma, double rcond) {
  const double cutoff = sigma.size() ? rcond * sigma.maxCoeff() : 0.0;
  Vector inv(sigma.size());
  for (Index i = 0; i < sigma.size(); ++i)
    inv[i] = (sigma[i] > cutoff && sigma[i] > 0.0) ? 1.0 / sigma[i] : 0.0;
  return inv;
}

}  // namespace

Matrix pinv(const Matrix &a, std::optional<double> rcond) {
  const double rc = resolve_rcond(a, rcond);
  const SvdResult s = svd(a);
  return s.vt.transpose() * inverse_spectrum(s.sigma, rc).asDiagonal() *
         s.u.transpose();
}

Matrix lstsq(const Matrix &x, const Matrix &y, std::optional<double> rcond) {
  if (x.rows() != y.rows())
    throw ShapeError("lstsq: x has " + std::to_string(x.rows()) +
                     " rows but y has " + std::to_string(y.rows()));
  require_valid(y, "lstsq");
  const double rc = resolve_rcond(x, rcond);
  const SvdResult s = svd(x);
  // Multiply right-to-left so the N x N projector is never formed.
  return s.vt.transpose() *
         (inverse_spectrum(s.sigma, rc).asDiagonal() * (s.u.transpose() * y));
}

}  // namespace linearvc
