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

// Small file and string helpers shared by the serialisers and the CLI.

#ifndef LINEARVC_UTIL_HPP_
#define LINEARVC_UTIL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace linearvc {

/// Writes `contents` to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path &path,
                       std::string_view contents);

std::string read_text_file(const std::filesystem::path &path);

/// Ordered `key=value` lines; blank lines and `#` comments are skipped.
using Manifest = std::map<std::string, std::string>;

Manifest read_manifest(const std::filesystem::path &path);
void write_manifest(const std::filesystem::path &path,
                    const std::vector<std::pair<std::string, std::string>> &entries);
/// Throws ConsistencyError naming `path` when `key` is missing.
const std::string &manifest_get(const Manifest &m, const std::string &key,
                                const std::filesystem::path &path);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Number of worker threads to use when the caller passes 0.
unsigned default_threads();

/// Calls fn(begin, end) on contiguous chunks of [0, n) across `threads`
/// workers (0 = default_threads()).  Chunk boundaries depend only on n and
/// the worker count.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn &&fn) {
  if (threads == 0) threads = default_threads();
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    if (n) fn(std::size_t{0}, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&fn, &errors, w, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace linearvc

#endif  // LINEARVC_UTIL_HPP_
