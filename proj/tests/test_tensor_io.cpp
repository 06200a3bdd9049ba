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

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "linearvc/errors.hpp"
#include "linearvc/tensor_io.hpp"
#include "linearvc/util.hpp"
#include "oracles.hpp"

using namespace linearvc;
using linearvc::testing::TempDir;
using linearvc::testing::random_matrix;

namespace {

std::string header(std::uint64_t rows, std::uint64_t cols) {
  std::string h = "LVCF";
  h.push_back(1);
  h.push_back(1);
  h.push_back(0);
  h.push_back(0);
  for (auto v : {rows, cols})
    for (int i = 0; i < 8; ++i) h.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  return h;
}

std::string f32_le(float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  std::string s;
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
  return s;
}

void write_bytes(const std::filesystem::path &p, const std::string &bytes) {
  std::ofstream(p, std::ios::binary).write(bytes.data(), bytes.size());
}

}  // namespace

TEST_CASE("FeatureMatrix rejects empty and non-finite content") {
  CHECK_THROWS_AS(FeatureMatrix(Matrix(0, 3)), InvalidMatrixError);
  Matrix m = Matrix::Zero(2, 2);
  m(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS((void)FeatureMatrix(m), InvalidMatrixError);
  m(1, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((void)FeatureMatrix(m), InvalidMatrixError);
}

TEST_CASE("read_matrix decodes a hand-built file") {
  TempDir tmp;
  std::string bytes = header(2, 3);
  for (float v : {1.f, 2.f, 3.f, 4.f, 5.f, 6.f}) bytes += f32_le(v);
  write_bytes(tmp / "m.lvcf", bytes);
  const FeatureMatrix m = read_matrix(tmp / "m.lvcf");
  CHECK(m == FeatureMatrix{{1, 2, 3}, {4, 5, 6}});
}

TEST_CASE("write_matrix produces the documented byte layout") {
  TempDir tmp;
  write_matrix(FeatureMatrix{{0.0}}, tmp / "one.lvcf");
  CHECK(std::filesystem::file_size(tmp / "one.lvcf") == 28);

  const FeatureMatrix m{{1.5, -2.0}, {0.25, 8.0}};
  write_matrix(m, tmp / "m.lvcf");
  std::string expected = header(2, 2);
  for (float v : {1.5f, -2.0f, 0.25f, 8.0f}) expected += f32_le(v);
  CHECK(read_text_file(tmp / "m.lvcf") == expected);
}

TEST_CASE("LVCF round trip is bitwise for binary32 payloads") {
  TempDir tmp;
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Index rows = 1 + static_cast<Index>(rng() % 100);
    const Index cols = 1 + static_cast<Index>(rng() % 64);
    // Values pre-rounded to binary32 so the double round trip is exact too.
    Matrix v = random_matrix(rows, cols, rng, 100.0)
                   .cast<float>()
                   .cast<double>();
    const FeatureMatrix m(v);
    write_matrix(m, tmp / "r.lvcf");
    const std::string first = read_text_file(tmp / "r.lvcf");
    const FeatureMatrix back = read_matrix(tmp / "r.lvcf");
    CHECK(back == m);
    write_matrix(back, tmp / "r2.lvcf");
    CHECK(read_text_file(tmp / "r2.lvcf") == first);
  }
}

TEST_CASE("corrupt LVCF files are rejected with offsets") {
  TempDir tmp;
  std::string good = header(2, 3);
  for (int i = 0; i < 6; ++i) good += f32_le(static_cast<float>(i));

  SUBCASE("truncated payload names the expected length") {
    write_bytes(tmp / "t.lvcf", good.substr(0, 24 + 23));
    try {
      read_matrix(tmp / "t.lvcf");
      FAIL("expected LengthError");
    } catch (const LengthError &e) {
      CHECK(e.expected() == 24);
      CHECK(e.actual() == 23);
      CHECK(std::string(e.what()).find("expected 24 bytes") != std::string::npos);
    }
  }
  SUBCASE("short header") {
    CHECK_THROWS_AS(decode_lvcf(good.substr(0, 10)), LengthError);
  }
  auto expect_offset = [&](std::string bytes, std::uint64_t offset) {
    try {
      decode_lvcf(bytes);
      FAIL("expected FormatError");
    } catch (const FormatError &e) {
      CHECK(e.offset() == offset);
    }
  };
  SUBCASE("bad magic") {
    std::string b = good;
    b[0] = 'X';
    expect_offset(b, 0);
  }
  SUBCASE("bad version") {
    std::string b = good;
    b[4] = 2;
    expect_offset(b, 4);
  }
  SUBCASE("bad dtype") {
    std::string b = good;
    b[5] = 2;
    expect_offset(b, 5);
  }
  SUBCASE("non-zero reserved byte") {
    std::string b = good;
    b[7] = 1;
    expect_offset(b, 7);
  }
  SUBCASE("zero rows") { expect_offset(header(0, 3), 8); }
  SUBCASE("trailing bytes") { expect_offset(good + "xx", 48); }
  SUBCASE("NaN payload value") {
    std::string b = header(2, 3);
    for (int i = 0; i < 6; ++i)
      b += f32_le(i == 4 ? std::numeric_limits<float>::quiet_NaN() : 1.f);
    expect_offset(b, 24 + 4 * 4);
  }
}

TEST_CASE("write_matrix errors") {
  CHECK_THROWS_AS(write_matrix(FeatureMatrix{{1.0}}, "/nonexistent_dir/x/y.lvcf"),
                  IoError);
  CHECK_THROWS_AS(encode_lvcf(FeatureMatrix{{1e300}}), InvalidMatrixError);
  CHECK_THROWS_AS(read_matrix("/nonexistent_dir/missing.lvcf"), IoError);
}

TEST_CASE("svd spectra of simple matrices") {
  CHECK(svd(Matrix::Identity(3, 3), 3).sigma.isApprox(Vector::Ones(3)));
  Matrix d = Matrix::Zero(3, 3);
  d.diagonal() << 3, 2, 1;
  const SvdResult s = svd(d, 2);
  REQUIRE(s.sigma.size() == 2);
  CHECK(s.sigma[0] == doctest::Approx(3.0));
  CHECK(s.sigma[1] == doctest::Approx(2.0));
  CHECK(s.u.rows() == 3);
  CHECK(s.vt.cols() == 3);
  CHECK_THROWS_AS(svd(d, 0), ParameterError);
  CHECK_THROWS_AS(svd(d, 4), ParameterError);
}

TEST_CASE("svd invariants on random shapes") {
  std::mt19937_64 rng(11);
  const std::pair<Index, Index> shapes[] = {{50, 20}, {20, 50}, {1, 7}, {300, 64}, {2000, 1024}};
  for (auto [n, d] : shapes) {
    CAPTURE(n);
    CAPTURE(d);
    const Matrix a = random_matrix(n, d, rng);
    const Index k = std::min(n, d);
    const SvdResult s = svd(a, k);
    for (Index i = 0; i < k; ++i) CHECK(s.sigma[i] >= 0.0);
    for (Index i = 1; i < k; ++i) CHECK(s.sigma[i] <= s.sigma[i - 1]);
    CHECK((s.u.transpose() * s.u - Matrix::Identity(k, k)).norm() <= 1e-8 * k);
    CHECK((s.vt * s.vt.transpose() - Matrix::Identity(k, k)).norm() <= 1e-8 * k);
    CHECK((a - s.reconstruct()).norm() <= 1e-6 * a.norm());
    if (n * d <= 20000) {
      const Vector jac = linearvc::testing::jacobi_singular_values(a);
      CHECK((jac - s.sigma).norm() <= 1e-10 * jac[0]);
    }
  }
}

TEST_CASE("truncated svd meets the Eckart-Young bound") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix a = random_matrix(40, 25, rng);
    const Vector full = linearvc::testing::jacobi_singular_values(a);
    for (Index k : {1, 5, 13, 24}) {
      const double err = (a - svd(a, k).reconstruct()).squaredNorm();
      const double discarded = full.tail(full.size() - k).squaredNorm();
      CHECK(err == doctest::Approx(discarded).epsilon(1e-6));
    }
  }
}

TEST_CASE("pinv") {
  CHECK(pinv(Matrix::Identity(4, 4)).isApprox(Matrix::Identity(4, 4)));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2.0;
  const Matrix p = pinv(d, 1e-10);
  CHECK(p(0, 0) == doctest::Approx(0.5));
  CHECK(p(0, 1) == 0.0);
  CHECK(p(1, 0) == 0.0);
  CHECK(p(1, 1) == 0.0);

  std::mt19937_64 rng(3);
  const Matrix a = random_matrix(10, 6, rng);
  const Matrix ap = pinv(a);
  CHECK((ap * a - Matrix::Identity(6, 6)).norm() <= 1e-8);
  CHECK((a * ap * a - a).norm() <= 1e-6 * a.norm());
  CHECK((ap * a * ap - ap).norm() <= 1e-6 * ap.norm());
  CHECK_THROWS_AS(pinv(a, -1.0), ParameterError);
}

TEST_CASE("pinv of a rank-deficient matrix satisfies the Penrose conditions") {
  std::mt19937_64 rng(4);
  const Matrix a = random_matrix(12, 3, rng) * random_matrix(3, 8, rng);
  const Matrix ap = pinv(a);
  CHECK((a * ap * a - a).norm() <= 1e-6 * a.norm());
  CHECK((ap * a * ap - ap).norm() <= 1e-6 * ap.norm());
  const Matrix sym1 = a * ap, sym2 = ap * a;
  CHECK((sym1 - sym1.transpose()).norm() <= 1e-8);
  CHECK((sym2 - sym2.transpose()).norm() <= 1e-8);
}

TEST_CASE("lstsq") {
  CHECK(lstsq(Matrix::Identity(3, 3), Matrix::Identity(3, 3))
            .isApprox(Matrix::Identity(3, 3)));

  Matrix x(3, 2);
  x << 1, 0, 0, 1, 1, 1;
  const Matrix y = 2.0 * x;
  const Matrix w = lstsq(x, y);
  const Matrix oracle = linearvc::testing::normal_equations(x, y);
  CHECK((oracle - 2.0 * Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK((w - oracle).norm() < 1e-12);

  CHECK_THROWS_AS(lstsq(Matrix::Ones(3, 2), Matrix::Ones(4, 2)), ShapeError);
}

TEST_CASE("lstsq returns the minimum-norm solution when x is rank deficient") {
  std::mt19937_64 rng(5);
  Matrix x = random_matrix(30, 4, rng);
  x.col(3) = x.col(0) + x.col(1);  // rank 3
  const Matrix y = random_matrix(30, 2, rng);
  const Matrix w = lstsq(x, y);
  // Any null-space component would increase the norm without changing xW.
  Vector null(4);
  null << 1, 1, 0, -1;
  null.normalize();
  CHECK((null.transpose() * w).norm() < 1e-10);
  CHECK((x.transpose() * (y - x * w)).norm() <= 1e-6 * (x.transpose() * y).norm());
}

TEST_CASE("lstsq on 1024-dimensional features") {
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(1500, 1024, rng);
  const Matrix y = random_matrix(1500, 1024, rng);
  const Matrix w = lstsq(x, y);
  CHECK(w.rows() == 1024);
  CHECK(w.cols() == 1024);
  CHECK((x.transpose() * (y - x * w)).norm() <= 1e-6 * (x.transpose() * y).norm());
}
