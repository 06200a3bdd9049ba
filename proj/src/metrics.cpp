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

#include "linearvc/metrics.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "linearvc/errors.hpp"
#include "linearvc/util.hpp"

namespace linearvc {

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 0x80 && std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && std::ispunct(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : ch);
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view text) {
  const std::string norm = normalize_text(text);
  if (norm.empty()) return {};
  return split(norm, ' ');
}

std::vector<std::string> char_tokens(std::string_view text) {
  const std::string norm = normalize_text(text);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < norm.size();) {
    const auto lead = static_cast<unsigned char>(norm[i]);
    std::size_t len = 1;
    if (lead >= 0xf0) len = 4;
    else if (lead >= 0xe0) len = 3;
    else if (lead >= 0xc0) len = 2;
    len = std::min(len, norm.size() - i);
    out.emplace_back(norm.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

std::vector<std::string> tokens(std::string_view text, ErrorUnit unit) {
  return unit == ErrorUnit::kWord ? word_tokens(text) : char_tokens(text);
}

}  // namespace

double wer(std::string_view reference, std::string_view hypothesis,
           ErrorUnit unit) {
  const auto ref = tokens(reference, unit);
  if (ref.empty())
    throw UndefinedMetricError("error rate is undefined for an empty reference");
  const auto hyp = tokens(hypothesis, unit);
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

ErrorRateReport corpus_error_rate(std::span<const std::string> references,
                                  std::span<const std::string> hypotheses,
                                  ErrorUnit unit) {
  if (references.size() != hypotheses.size())
    throw ShapeError("corpus_error_rate: reference/hypothesis count mismatch");
  ErrorRateReport rep;
  rep.metric = unit == ErrorUnit::kWord ? "wer" : "cer";
  for (std::size_t i = 0; i < references.size(); ++i) {
    const auto ref = tokens(references[i], unit);
    rep.errors += edit_distance(ref, tokens(hypotheses[i], unit));
    rep.reference += ref.size();
  }
  if (rep.reference == 0)
    throw UndefinedMetricError("error rate is undefined for an empty reference");
  rep.value =
      static_cast<double>(rep.errors) / static_cast<double>(rep.reference);
  return rep;
}

void validate(const ScoreSet &scores) {
  if (scores.genuine.empty() || scores.impostor.empty())
    throw ParameterError("score set needs at least one genuine and one impostor trial");
  for (const auto *list : {&scores.genuine, &scores.impostor})
    for (double s : *list)
      if (!std::isfinite(s)) throw ParameterError("non-finite verification score");
}

double eer(const ScoreSet &scores) {
  validate(scores);
  std::vector<double> gen = scores.genuine, imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds(gen);
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                   thresholds.end());

  const auto ng = static_cast<double>(gen.size());
  const auto ni = static_cast<double>(imp.size());
  // Operating points in ascending threshold order: FAR falls, FRR rises.
  std::vector<double> far, frr;
  far.reserve(thresholds.size() + 1);
  frr.reserve(thresholds.size() + 1);
  for (double t : thresholds) {
    const auto rejected = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
    const auto accepted = imp.end() - std::lower_bound(imp.begin(), imp.end(), t);
    far.push_back(static_cast<double>(accepted) / ni);
    frr.push_back(static_cast<double>(rejected) / ng);
  }
  far.push_back(0.0);  // threshold above every score
  frr.push_back(1.0);

  for (std::size_t i = 0; i < far.size(); ++i) {
    if (frr[i] < far[i]) continue;
    if (frr[i] == far[i]) return far[i];
    // i > 0: the lowest threshold accepts everything, so far[0] = 1 > frr[0].
    const double d0 = far[i - 1] - frr[i - 1];  // > 0
    const double d1 = far[i] - frr[i];          // < 0
    const double alpha = d0 / (d0 - d1);
    return far[i - 1] + alpha * (far[i] - far[i - 1]);
  }
  return 0.5;  // unreachable: the last point always has frr >= far
}

ScoreSet verification_scores(std::span<const FeatureMatrix> converted,
                             std::span<const FeatureMatrix> real,
                             std::span<const Index> real_speakers, Index target,
                             TrialDesign design) {
  if (real.size() != real_speakers.size())
    throw ShapeError("verification_scores: one speaker label per real utterance");
  if (real.empty() || converted.empty())
    throw ParameterError("verification_scores: no utterances");
  const Index d = real[0].cols();
  for (const auto *set : {&converted, &real})
    for (const auto &m : *set)
      if (m.cols() != d)
        throw ShapeError("verification_scores: utterances disagree on feature dimension");

  auto embed = [](const FeatureMatrix &m) -> Vector {
    return m.values().colwise().mean().transpose();
  };
  Vector enrol = Vector::Zero(d);
  Index n_target = 0;
  for (std::size_t i = 0; i < real.size(); ++i)
    if (real_speakers[i] == target) {
      enrol += embed(real[i]);
      ++n_target;
    }
  if (n_target == 0)
    throw ParameterError("verification_scores: target has no real utterances");
  enrol /= static_cast<double>(n_target);

  auto score = [&](const FeatureMatrix &m) {
    const Vector e = embed(m);
    const double denom = e.norm() * enrol.norm();
    return denom < 1e-12 ? 0.0 : e.dot(enrol) / denom;
  };

  ScoreSet out;
  if (design == TrialDesign::kSpoofDetection) {
    for (std::size_t i = 0; i < real.size(); ++i)
      if (real_speakers[i] == target) out.genuine.push_back(score(real[i]));
    for (const auto &m : converted) out.impostor.push_back(score(m));
  } else {
    for (const auto &m : converted) out.genuine.push_back(score(m));
    for (std::size_t i = 0; i < real.size(); ++i)
      if (real_speakers[i] != target) out.impostor.push_back(score(real[i]));
    if (out.impostor.empty())
      throw ParameterError("verification_scores: no non-target real utterances");
  }
  return out;
}

ScoreSet parse_scores_csv(std::string_view text) {
  ScoreSet out;
  std::size_t lineno = 0;
  for (const auto &raw : split(text, '\n')) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos)
      throw ParameterError("scores CSV line " + std::to_string(lineno) +
                           ": expected 'label,score'");
    const auto label = trim(line.substr(0, comma));
    const std::string value(trim(line.substr(comma + 1)));
    if (label == "label") continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != value.size() || value.empty())
      throw ParameterError("scores CSV line " + std::to_string(lineno) +
                           ": bad score '" + value + "'");
    if (label == "genuine") out.genuine.push_back(v);
    else if (label == "impostor") out.impostor.push_back(v);
    else
      throw ParameterError("scores CSV line " + std::to_string(lineno) +
                           ": label must be genuine or impostor");
  }
  return out;
}

std::string scores_to_csv(const ScoreSet &scores) {
  std::string out = "label,score\n";
  char buf[64];
  for (double s : scores.genuine) {
    std::snprintf(buf, sizeof buf, "%.17g", s);
    out += std::string("genuine,") + buf + "\n";
  }
  for (double s : scores.impostor) {
    std::snprintf(buf, sizeof buf, "%.17g", s);
    out += std::string("impostor,") + buf + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_transcripts(
    std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto &raw : split(text, '\n')) {
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw ParameterError("transcript line without a tab: '" +
                           std::string(line) + "'");
    out.emplace_back(std::string(line.substr(0, tab)),
                     std::string(line.substr(tab + 1)));
  }
  return out;
}

}  // namespace linearvc
