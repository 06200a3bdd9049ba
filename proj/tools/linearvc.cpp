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


#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "linearvc/errors.hpp"
#include "linearvc/factorization.hpp"
#include "linearvc/matching.hpp"
#include "linearvc/metrics.hpp"
#include "linearvc/synth.hpp"
#include "linearvc/tensor_io.hpp"
#include "linearvc/transforms.hpp"
#include "linearvc/util.hpp"

namespace fs = std::filesystem;
using namespace linearvc;
using json = nlohmann::ordered_json;

namespace {

struct Globals {
  unsigned threads = 0;
  std::uint64_t seed = 17;
};

std::vector<Index> parse_index_list(const std::string &text) {
  std::vector<Index> out;
  for (const auto &part : split(text, ',')) {
    const auto t = trim(part);
    if (t.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(std::string(t), &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != t.size() || v < 1)
      throw CLI::ValidationError("--ranks", "'" + std::string(t) + "' is not a positive integer");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw CLI::ValidationError("--ranks", "empty rank list");
  return out;
}

std::vector<std::string> parse_id_list(const std::string &text, std::size_t expected) {
  std::vector<std::string> ids;
  for (const auto &part : split(text, ',')) ids.emplace_back(trim(part));
  if (ids.size() != expected)
    throw CLI::ValidationError("--ids", "expected " + std::to_string(expected) +
                                            " comma-separated ids, got " +
                                            std::to_string(ids.size()));
  return ids;
}

std::vector<std::string> stem_ids(const std::vector<std::string> &paths) {
  std::vector<std::string> ids;
  for (const auto &p : paths) ids.push_back(fs::path(p).stem().string());
  return ids;
}

std::vector<FeatureMatrix> read_all(const std::vector<std::string> &paths) {
  std::vector<FeatureMatrix> out;
  for (const auto &p : paths) out.push_back(read_matrix(p));
  return out;
}

std::vector<FeatureMatrix> synth_speakers(const fs::path &dir) {
  const Manifest mf = read_manifest(dir / "manifest.txt");
  const Index k = std::stoll(manifest_get(mf, "k_speakers", dir / "manifest.txt"));
  std::vector<FeatureMatrix> out;
  for (Index i = 0; i < k; ++i)
    out.push_back(read_matrix(dir / ("speaker_" + std::to_string(i) + ".lvcf")));
  return out;
}

// Builds the block either by nearest-neighbour alignment to the pivot or by
// stacking matrices that are already frame-aligned.
Matrix build_block(const std::vector<FeatureMatrix> &speakers,
                   const std::vector<std::string> &ids, const std::string &pivot,
                   bool aligned, Index k_match, unsigned threads) {
  if (aligned) return stack_aligned(speakers);
  const auto it = std::find(ids.begin(), ids.end(), pivot);
  if (it == ids.end()) throw UnknownSpeakerError("pivot id '" + pivot + "' is not a speaker");
  return assemble_block(speakers, it - ids.begin(), k_match, threads).block;
}

std::map<std::string, std::string> read_transcript_map(const fs::path &path) {
  std::map<std::string, std::string> out;
  for (auto &[id, text] : parse_transcripts(read_text_file(path)))
    if (!out.emplace(id, text).second)
      throw ConsistencyError(path.string() + ": duplicate utterance id '" + id + "'");
  return out;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Linear voice conversion between speaker feature matrices"};
  app.name("linearvc");
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  Globals g;
  app.add_option("--threads", g.threads, "Worker threads, 0 = all cores")
      ->envname("LINEARVC_THREADS");
  app.add_option("--seed", g.seed, "Seed for randomised paths")->envname("LINEARVC_SEED");

  json summary;
  std::function<void()> action;
  const CLI::Validator existing = CLI::ExistingFile;
  const CLI::Validator existing_dir = CLI::ExistingDirectory;

  // match
  auto *match = app.add_subcommand("match", "Nearest-neighbour frame matching");
  std::string m_src, m_tgt, m_out;
  Index m_k = 1;
  match->add_option("--src", m_src, "Source features (LVCF)")->required()->check(existing);
  match->add_option("--tgt", m_tgt, "Target features (LVCF)")->required()->check(existing);
  match->add_option("--k", m_k, "Neighbours per source frame")->check(CLI::PositiveNumber);
  match->add_option("--out", m_out, "Pairs output (LVCF, rows: source, target, distance)")
      ->required();
  match->callback([&] {
    action = [&] {
      const MatchedPairs p = match_frames(read_matrix(m_src), read_matrix(m_tgt), m_k, g.threads);
      write_matrix(pairs_to_matrix(p), m_out);
      double mean = 0.0;
      for (double d : p.distances) mean += d;
      summary["pairs"] = p.size();
      summary["mean_distance"] = mean / static_cast<double>(p.size());
    };
  });

  // fit
  auto *fitc = app.add_subcommand("fit", "Fit a linear map from source to target features");
  std::string f_src, f_tgt, f_out, f_kind = "unconstrained";
  bool f_bias = false, f_aligned = false;
  double f_ridge = 0.0;
  Index f_k = 1;
  fitc->add_option("--src", f_src, "Source features (LVCF)")->required()->check(existing);
  fitc->add_option("--tgt", f_tgt, "Target features (LVCF)")->required()->check(existing);
  fitc->add_option("--kind", f_kind, "Map family")
      ->check(CLI::IsMember({"bias", "bias_only", "orthogonal", "unconstrained"}));
  fitc->add_flag("--bias", f_bias, "Fit a bias term");
  fitc->add_option("--ridge", f_ridge, "Ridge penalty (unconstrained only)")
      ->check(CLI::NonNegativeNumber);
  fitc->add_flag("--aligned", f_aligned, "Rows of src and tgt already correspond");
  fitc->add_option("--k-match", f_k, "Neighbours averaged per source frame")
      ->check(CLI::PositiveNumber);
  fitc->add_option("--out", f_out, "Output map directory")->required();
  fitc->callback([&] {
    action = [&] {
      const FeatureMatrix x = read_matrix(f_src);
      FeatureMatrix y = read_matrix(f_tgt);
      if (!f_aligned) y = knn_convert(x, y, f_k, g.threads);
      FitOptions opts;
      opts.ridge = f_ridge;
      const LinearMap map = fit(x, y, parse_map_kind(f_kind), f_bias, opts);
      save_map(map, f_out);
      const double err = fit_error(map, x, y);
      summary["kind"] = std::string(to_string(map.kind));
      summary["with_bias"] = map.with_bias;
      summary["frames"] = x.rows();
      summary["dim"] = x.cols();
      summary["fit_error"] = err;
      summary["relative_fit_error"] = std::sqrt(err / y.values().squaredNorm());
    };
  });

  // apply
  auto *applyc = app.add_subcommand("apply", "Apply a fitted map to features");
  std::string a_map, a_in, a_out;
  applyc->add_option("--map", a_map, "Map directory")->required()->check(existing_dir);
  applyc->add_option("--in", a_in, "Input features (LVCF)")->required()->check(existing);
  applyc->add_option("--out", a_out, "Output features (LVCF)")->required();
  applyc->callback([&] {
    action = [&] {
      const FeatureMatrix y = apply(load_map(a_map), read_matrix(a_in));
      write_matrix(y, a_out);
      summary["rows"] = y.rows();
      summary["cols"] = y.cols();
    };
  });

  // knn-convert
  auto *knn = app.add_subcommand("knn-convert", "Replace each frame by the mean of its k nearest pool frames");
  std::string n_src, n_pool, n_out;
  Index n_k = 4;
  knn->add_option("--src", n_src, "Source features (LVCF)")->required()->check(existing);
  knn->add_option("--pool", n_pool, "Target pool features (LVCF)")->required()->check(existing);
  knn->add_option("--k", n_k, "Neighbours averaged per frame")->check(CLI::PositiveNumber);
  knn->add_option("--out", n_out, "Output features (LVCF)")->required();
  knn->callback([&] {
    action = [&] {
      const FeatureMatrix y = knn_convert(read_matrix(n_src), read_matrix(n_pool), n_k, g.threads);
      write_matrix(y, n_out);
      summary["rows"] = y.rows();
      summary["k"] = n_k;
    };
  });

  // factorize
  auto *fac = app.add_subcommand("factorize", "Factorise speakers into shared content and speaker maps");
  std::vector<std::string> z_speakers;
  std::string z_ids, z_pivot, z_out;
  Index z_rank = kDefaultRank, z_k = 1;
  bool z_aligned = false;
  fac->add_option("--speakers", z_speakers, "Speaker feature files (LVCF), two or more")
      ->required()->expected(2, -1)->check(existing);
  fac->add_option("--ids", z_ids, "Comma-separated speaker ids (default: file stems)");
  fac->add_option("--rank", z_rank, "Retained rank")->check(CLI::PositiveNumber);
  fac->add_option("--pivot", z_pivot, "Pivot speaker id (default: smallest id)");
  fac->add_flag("--aligned", z_aligned, "Speaker rows already correspond");
  fac->add_option("--k-match", z_k, "Neighbours averaged per pivot frame")
      ->check(CLI::PositiveNumber);
  fac->add_option("--out", z_out, "Output factorization directory")->required();
  fac->callback([&] {
    const auto ids = z_ids.empty() ? stem_ids(z_speakers) : parse_id_list(z_ids, z_speakers.size());
    action = [&, ids] {
      const auto speakers = read_all(z_speakers);
      const std::string pivot = z_pivot.empty() ? default_pivot(ids) : z_pivot;
      const Matrix block = build_block(speakers, ids, pivot, z_aligned, z_k, g.threads);
      const SpeakerFactorization f = factorize(block, ids, speakers[0].cols(), z_rank, pivot);
      save_factorization(f, z_out);
      summary["rank"] = f.rank;
      summary["effective_rank"] = f.effective_rank;
      summary["speakers"] = f.speaker_count();
      summary["pivot"] = f.pivot_id;
      summary["relative_reconstruction_error"] =
          std::sqrt(reconstruction_error(f, block) / block.squaredNorm());
    };
  });

  // convert
  auto *conv = app.add_subcommand("convert", "Convert features between speakers of a factorization");
  std::string c_fact, c_src, c_tgt, c_in, c_out;
  double c_rcond = kDefaultConvertRcond;
  conv->add_option("--fact", c_fact, "Factorization directory")->required()->check(existing_dir);
  conv->add_option("--src-id", c_src, "Source speaker id")->required();
  conv->add_option("--tgt-id", c_tgt, "Target speaker id")->required();
  conv->add_option("--in", c_in, "Source features (LVCF)")->required()->check(existing);
  conv->add_option("--out", c_out, "Converted features (LVCF)")->required();
  conv->add_option("--rcond", c_rcond, "Pseudoinverse cutoff relative to the largest singular value")
      ->check(CLI::NonNegativeNumber);
  conv->callback([&] {
    action = [&] {
      const SpeakerFactorization f = load_factorization(c_fact);
      const FeatureMatrix y = convert(f, read_matrix(c_in), c_src, c_tgt, c_rcond);
      write_matrix(y, c_out);
      summary["rows"] = y.rows();
      summary["rank"] = f.rank;
    };
  });

  // rank-sweep
  auto *sweep = app.add_subcommand("rank-sweep", "Reconstruction and conversion metrics across ranks");
  std::vector<std::string> s_speakers;
  std::string s_ids, s_ranks = "2,4,8,16,32,64,100", s_pivot, s_truth, s_out;
  bool s_aligned = false;
  Index s_k = 1;
  sweep->add_option("--speakers", s_speakers, "Speaker feature files (LVCF)")
      ->expected(2, -1)->check(existing);
  sweep->add_option("--ids", s_ids, "Comma-separated speaker ids (default: file stems)");
  sweep->add_option("--ranks", s_ranks, "Comma-separated ranks");
  sweep->add_option("--pivot", s_pivot, "Pivot speaker id (default: smallest id)");
  sweep->add_flag("--aligned", s_aligned, "Speaker rows already correspond");
  sweep->add_option("--k-match", s_k, "Neighbours averaged per pivot frame")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--truth", s_truth,
                    "Synth directory: adds content_accuracy and speaker_score; "
                    "speakers are read from it when --speakers is absent")
      ->check(existing_dir);
  sweep->add_option("--out", s_out, "Output CSV")->required();
  sweep->callback([&] {
    if (s_speakers.empty() && s_truth.empty())
      throw CLI::ValidationError("rank-sweep", "needs --speakers or --truth");
    const auto ranks = parse_index_list(s_ranks);
    action = [&, ranks] {
      std::vector<FeatureMatrix> speakers;
      std::vector<std::string> ids;
      bool aligned = s_aligned;
      if (s_speakers.empty()) {
        speakers = synth_speakers(s_truth);
        for (std::size_t k = 0; k < speakers.size(); ++k) ids.push_back("speaker_" + std::to_string(k));
        aligned = true;
      } else {
        speakers = read_all(s_speakers);
        ids = s_ids.empty() ? stem_ids(s_speakers) : parse_id_list(s_ids, s_speakers.size());
      }
      const std::string pivot = s_pivot.empty() ? default_pivot(ids) : s_pivot;
      const Matrix block = build_block(speakers, ids, pivot, aligned, s_k, g.threads);

      EvalHook hook;
      SynthTruth truth;
      if (!s_truth.empty()) {
        truth = load_truth(s_truth);
        if (truth.speakers() != static_cast<Index>(speakers.size()))
          throw ConsistencyError("--truth has " + std::to_string(truth.speakers()) +
                                 " speakers but " + std::to_string(speakers.size()) +
                                 " were given");
        for (const auto &s : speakers)
          if (s.rows() != truth.content_points.rows())
            throw ConsistencyError("--truth frame count differs from the speaker matrices");
        hook = [&](const SpeakerFactorization &f, const Matrix &) {
          double acc = 0.0, spk = 0.0;
          int pairs = 0;
          for (std::size_t a = 0; a < speakers.size(); ++a)
            for (std::size_t b = 0; b < speakers.size(); ++b) {
              if (a == b) continue;
              const FeatureMatrix y = convert(f, speakers[a], ids[a], ids[b]);
              acc += content_accuracy(y, truth, static_cast<Index>(b));
              spk += speaker_score(y, truth, static_cast<Index>(b));
              ++pairs;
            }
          return Metrics{{"content_accuracy", acc / pairs}, {"speaker_score", spk / pairs}};
        };
      }
      const auto rows = rank_sweep(block, ids, speakers[0].cols(), ranks, hook, pivot, g.threads);
      write_file_atomic(s_out, sweep_csv(rows));
      summary["ranks"] = ranks;
      summary["rows"] = rows.size();
      summary["relative_reconstruction_error"] = json::object();
      for (const auto &r : rows)
        if (r.metric == "relative_reconstruction_error")
          summary["relative_reconstruction_error"][std::to_string(r.rank)] = r.value;
    };
  });

  // synth
  auto *syn = app.add_subcommand("synth", "Generate a synthetic multi-speaker plant");
  SynthSpec spec;
  std::string y_out, y_family = "orthogonal";
  syn->add_option("--frames", spec.n_frames, "Frames per speaker")->check(CLI::PositiveNumber);
  syn->add_option("--dim", spec.d, "Feature dimension")->check(CLI::PositiveNumber);
  syn->add_option("--rank", spec.r_true, "Planted content rank")->check(CLI::PositiveNumber);
  syn->add_option("--speakers", spec.k_speakers, "Number of speakers")->check(CLI::PositiveNumber);
  syn->add_option("--classes", spec.n_content_classes, "Content classes");
  syn->add_option("--noise", spec.noise_sigma, "Additive noise std")->check(CLI::NonNegativeNumber);
  syn->add_option("--family", y_family, "Speaker transform family")
      ->check(CLI::IsMember({"orthogonal", "affine"}));
  syn->add_option("--speaker-spread", spec.speaker_spread,
                  "1 = independent speaker subspaces, 0 = shared")
      ->check(CLI::Range(0.0, 1.0));
  syn->add_option("--out", y_out, "Output directory")->required();
  syn->callback([&] {
    action = [&] {
      spec.transform_family = parse_transform_family(y_family);
      spec.seed = g.seed;
      const SynthData data = generate(spec);
      save_synth(data, spec, y_out);
      summary["speakers"] = spec.k_speakers;
      summary["frames"] = spec.n_frames;
      summary["dim"] = spec.d;
      summary["seed"] = spec.seed;
    };
  });

  // eval
  auto *eval = app.add_subcommand("eval", "Objective metrics");
  eval->require_subcommand(1);
  std::string e_ref, e_hyp, e_scores;
  for (const char *unit : {"wer", "cer"}) {
    auto *sub = eval->add_subcommand(unit, std::string(unit) == "wer" ? "Word error rate"
                                                                      : "Character error rate");
    sub->add_option("--ref", e_ref, "Reference transcripts (id<TAB>text)")->required()->check(existing);
    sub->add_option("--hyp", e_hyp, "Hypothesis transcripts (id<TAB>text)")->required()->check(existing);
    const ErrorUnit eu = std::string(unit) == "wer" ? ErrorUnit::kWord : ErrorUnit::kChar;
    sub->callback([&, eu] {
      action = [&, eu] {
        const auto refs = read_transcript_map(e_ref);
        const auto hyps = read_transcript_map(e_hyp);
        std::vector<std::string> r, h;
        for (const auto &[id, text] : refs) {
          const auto it = hyps.find(id);
          if (it == hyps.end())
            throw ConsistencyError("no hypothesis for utterance '" + id + "'");
          r.push_back(text);
          h.push_back(it->second);
        }
        if (hyps.size() != refs.size())
          throw ConsistencyError("hypotheses contain ids missing from the references");
        const ErrorRateReport rep = corpus_error_rate(r, h, eu);
        summary["metric"] = rep.metric;
        summary["value"] = rep.value;
        summary["errors"] = rep.errors;
        summary["reference_tokens"] = rep.reference;
        summary["utterances"] = r.size();
      };
    });
  }
  auto *eerc = eval->add_subcommand("eer", "Equal error rate of verification scores");
  eerc->add_option("--scores", e_scores, "CSV with label,score rows (genuine|impostor)")
      ->required()->check(existing);
  eerc->callback([&] {
    action = [&] {
      const ScoreSet s = parse_scores_csv(read_text_file(e_scores));
      summary["metric"] = "eer";
      summary["value"] = eer(s);
      summary["genuine"] = s.genuine.size();
      summary["impostor"] = s.impostor.size();
    };
  });

  // export-viz
  auto *viz = app.add_subcommand("export-viz", "Binarised |W| image of a fitted map (PGM)");
  std::string v_map, v_out;
  std::optional<double> v_threshold;
  Index v_dims = 256;
  viz->add_option("--map", v_map, "Map directory")->required()->check(existing_dir);
  viz->add_option("--threshold", v_threshold,
                  "Magnitude threshold (default: 99th percentile of |W|)");
  viz->add_option("--dims", v_dims, "Leading dimensions shown (clipped to the map size)")
      ->check(CLI::PositiveNumber);
  viz->add_option("--out", v_out, "Output image (PGM)")->required();
  viz->callback([&] {
    action = [&] {
      const LinearMap map = load_map(v_map);
      const double threshold = v_threshold ? *v_threshold : default_viz_threshold(map);
      const Index dims = std::min(v_dims, map.fitted_dim());
      const BinaryImage img = export_viz(map, threshold, dims);
      write_pgm(img, v_out);
      std::size_t on = 0;
      for (auto p : img.pixels) on += p != 0;
      summary["threshold"] = threshold;
      summary["dims"] = dims;
      summary["fraction_on"] = static_cast<double>(on) / static_cast<double>(img.pixels.size());
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }

  std::string name;
  for (const CLI::App *sub = &app; !sub->get_subcommands().empty();) {
    sub = sub->get_subcommands().front();
    name += (name.empty() ? "" : " ") + sub->get_name();
  }
  const auto t0 = std::chrono::steady_clock::now();
  try {
    action();
  } catch (const std::exception &e) {
    std::cerr << "linearvc " << name << ": " << e.what() << "\n";
    return 1;
  }
  json out;
  out["subcommand"] = name;
  out["elapsed_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.update(summary);
  std::cout << out.dump() << "\n";
  return 0;
}
