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

#ifndef LINEARVC_METRICS_HPP_
#define LINEARVC_METRICS_HPP_

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "linearvc/tensor_io.hpp"

namespace linearvc {

/// Levenshtein distance with unit costs.  Works on any pair of
/// random-access sequences whose elements compare with ==.
template <class Seq>
std::size_t edit_distance(const Seq &reference, const Seq &hypothesis) {
  const std::size_t n = std::size(reference), m = std::size(hypothesis);
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub =
          prev[j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

enum class ErrorUnit { kWord, kChar };

/// Lower-cases ASCII letters, removes ASCII punctuation and collapses
/// whitespace runs to single spaces (ends trimmed).  Non-ASCII bytes pass
/// through unchanged.
std::string normalize_text(std::string_view text);

/// Word tokens of the normalised text.
std::vector<std::string> word_tokens(std::string_view text);
/// UTF-8 code points of the normalised text, spaces included.
std::vector<std::string> char_tokens(std::string_view text);

struct ErrorRateReport {
  std::string metric;
  double value = 0.0;
  std::size_t errors = 0;     // edit operations (0 for EER)
  std::size_t reference = 0;  // reference tokens, or total trials for EER
};

/// edit_distance / reference token count.  Throws UndefinedMetricError when
/// the reference has no tokens.
double wer(std::string_view reference, std::string_view hypothesis,
           ErrorUnit unit = ErrorUnit::kWord);

/// Corpus-level rate: summed edits over summed reference tokens.
ErrorRateReport corpus_error_rate(std::span<const std::string> references,
                                  std::span<const std::string> hypotheses,
                                  ErrorUnit unit);

/// Verification trials; higher scores are more target-like.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

/// Throws ParameterError when either list is empty or holds a non-finite
/// score.
void validate(const ScoreSet &scores);

/// Equal error rate.  Operating points are taken at every distinct score
/// (accept iff score >= t) plus one point above the maximum; the result is
/// the rate where false acceptance and false rejection cross, linearly
/// interpolated between adjacent points when they never coincide.
double eer(const ScoreSet &scores);

/// How trials are formed in verification_scores.
enum class TrialDesign {
  /// Real target-speaker utterances are genuine trials and converted
  /// utterances are impostor (spoof) trials.  50% EER means the verifier
  /// cannot tell conversions from real speech, so higher is better.
  kSpoofDetection,
  /// Converted-to-target utterances are genuine trials and real utterances
  /// of the other speakers are impostors.
  kSpeakerIdentification,
};

/**
   Mean-embedding cosine verifier.

   Each utterance is embedded as its column mean.  The target enrolment
   vector is the mean of the target's real utterance embeddings.  Each score
   is the cosine similarity between an utterance embedding and the enrolment
   vector.  `real_speakers[i]` names the speaker of `real[i]`.
*/
ScoreSet verification_scores(std::span<const FeatureMatrix> converted,
                             std::span<const FeatureMatrix> real,
                             std::span<const Index> real_speakers, Index target,
                             TrialDesign design = TrialDesign::kSpoofDetection);

/// CSV with lines "label,score", label in {genuine, impostor}.  A header
/// line "label,score" is optional on input and always written on output.
ScoreSet parse_scores_csv(std::string_view text);
std::string scores_to_csv(const ScoreSet &scores);

/// Tab-separated "id<TAB>text" lines.
std::vector<std::pair<std::string, std::string>> parse_transcripts(
    std::string_view text);

}  // namespace linearvc

#endif  // LINEARVC_METRICS_HPP_
