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

#ifndef LINEARVC_ERRORS_HPP_
#define LINEARVC_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace linearvc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed LVCF content. `offset` is the byte position of the bad field.
class FormatError : public Error {
 public:
  FormatError(const std::string &what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }
  /// Message without the offset suffix.
  const std::string &detail() const { return detail_; }

 private:
  std::string detail_;
  std::uint64_t offset_;
};

/// Truncated payload: the file holds fewer bytes than its header declares.
class LengthError : public Error {
 public:
  LengthError(const std::string &what, std::uint64_t expected,
              std::uint64_t actual)
      : Error(what), expected_(expected), actual_(actual) {}
  std::uint64_t expected() const { return expected_; }
  std::uint64_t actual() const { return actual_; }

 private:
  std::uint64_t expected_;
  std::uint64_t actual_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument is outside its documented range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Matrix content violates an invariant (non-finite value, empty shape).
class InvalidMatrixError : public Error {
 public:
  using Error::Error;
};

class UnknownSpeakerError : public Error {
 public:
  using Error::Error;
};

/// A metric has no defined value for the input (e.g. empty reference).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// An index record points outside the matrix it refers to.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace linearvc

#endif  // LINEARVC_ERRORS_HPP_
