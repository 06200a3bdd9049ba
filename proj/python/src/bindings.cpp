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


#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "linearvc/errors.hpp"
#include "linearvc/factorization.hpp"
#include "linearvc/matching.hpp"
#include "linearvc/metrics.hpp"
#include "linearvc/synth.hpp"
#include "linearvc/tensor_io.hpp"
#include "linearvc/transforms.hpp"

namespace py = pybind11;
using namespace linearvc;

namespace {

std::vector<FeatureMatrix> to_features(const std::vector<Matrix> &ms) {
  return {ms.begin(), ms.end()};
}

}  // namespace

PYBIND11_MODULE(_linearvc, m) {
  m.doc() = "Linear voice conversion core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<LengthError>(m, "LengthError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<ShapeError>(m, "ShapeError", base.ptr());
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<InvalidMatrixError>(m, "InvalidMatrixError", base.ptr());
  py::register_exception<UnknownSpeakerError>(m, "UnknownSpeakerError", base.ptr());
  py::register_exception<UndefinedMetricError>(m, "UndefinedMetricError", base.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());

  // Matrices cross the boundary as float64 numpy arrays.
  m.def("read_matrix", [](const std::filesystem::path &p) { return read_matrix(p).values(); },
        py::arg("path"));
  m.def("write_matrix",
        [](const Matrix &v, const std::filesystem::path &p) { write_matrix(FeatureMatrix(v), p); },
        py::arg("matrix"), py::arg("path"));
  m.def("encode_lvcf", [](const Matrix &v) { return py::bytes(encode_lvcf(FeatureMatrix(v))); },
        py::arg("matrix"));
  m.def("decode_lvcf",
        [](const py::bytes &b) { return decode_lvcf(std::string_view(b)).values(); },
        py::arg("data"));

  m.def("lstsq", [](const Matrix &x, const Matrix &y) { return lstsq(x, y); }, py::arg("x"),
        py::arg("y"));
  m.def("pinv", [](const Matrix &a, std::optional<double> rcond) { return pinv(a, rcond); },
        py::arg("a"), py::arg("rcond") = py::none());

  py::class_<MatchedPairs>(m, "MatchedPairs")
      .def_readonly("k", &MatchedPairs::k)
      .def_readonly("source_indices", &MatchedPairs::source_indices)
      .def_readonly("target_indices", &MatchedPairs::target_indices)
      .def_readonly("distances", &MatchedPairs::distances)
      .def("__len__", &MatchedPairs::size);
  m.def("match_frames",
        [](const Matrix &s, const Matrix &t, Index k, unsigned threads) {
          return match_frames(FeatureMatrix(s), FeatureMatrix(t), k, threads);
        },
        py::arg("source"), py::arg("target"), py::arg("k") = 1, py::arg("threads") = 0);
  m.def("knn_convert",
        [](const Matrix &s, const Matrix &pool, Index k, unsigned threads) {
          return knn_convert(FeatureMatrix(s), FeatureMatrix(pool), k, threads).values();
        },
        py::arg("source"), py::arg("pool"), py::arg("k") = 4, py::arg("threads") = 0);

  py::class_<LinearMap>(m, "LinearMap")
      .def_property_readonly("kind", [](const LinearMap &l) { return std::string(to_string(l.kind)); })
      .def_readonly("weight", &LinearMap::weight)
      .def_readonly("bias", &LinearMap::bias)
      .def_readonly("with_bias", &LinearMap::with_bias)
      .def("apply", [](const LinearMap &l, const Matrix &x) { return apply(l, FeatureMatrix(x)).values(); },
           py::arg("x"))
      .def("fit_error",
           [](const LinearMap &l, const Matrix &x, const Matrix &y) {
             return fit_error(l, FeatureMatrix(x), FeatureMatrix(y));
           },
           py::arg("x"), py::arg("y"))
      .def("save", [](const LinearMap &l, const std::filesystem::path &d) { save_map(l, d); },
           py::arg("directory"));
  m.def("load_map", [](const std::filesystem::path &d) { return load_map(d); }, py::arg("directory"));
  m.def("fit",
        [](const Matrix &x, const Matrix &y, const std::string &kind, bool bias, double ridge) {
          FitOptions opts;
          opts.ridge = ridge;
          return fit(FeatureMatrix(x), FeatureMatrix(y), parse_map_kind(kind), bias, opts);
        },
        py::arg("x"), py::arg("y"), py::arg("kind") = "unconstrained", py::arg("bias") = false,
        py::arg("ridge") = 0.0);

  py::class_<SpeakerFactorization>(m, "SpeakerFactorization")
      .def_readonly("rank", &SpeakerFactorization::rank)
      .def_readonly("speaker_ids", &SpeakerFactorization::speaker_ids)
      .def_readonly("sigma", &SpeakerFactorization::sigma)
      .def_readonly("content_dim", &SpeakerFactorization::content_dim)
      .def_readonly("pivot_id", &SpeakerFactorization::pivot_id)
      .def_readonly("effective_rank", &SpeakerFactorization::effective_rank)
      .def("speaker_map", [](const SpeakerFactorization &f, const std::string &id) {
             return f.speaker_map(id);
           }, py::arg("id"))
      .def("content_codes", [](const SpeakerFactorization &f, const Matrix &b) {
             return content_codes(f, b);
           }, py::arg("block"))
      .def("reconstruction_error", [](const SpeakerFactorization &f, const Matrix &b) {
             return reconstruction_error(f, b);
           }, py::arg("block"))
      .def("convert",
           [](const SpeakerFactorization &f, const Matrix &x, const std::string &src,
              const std::string &tgt, double rcond) {
             return convert(f, FeatureMatrix(x), src, tgt, rcond).values();
           },
           py::arg("x"), py::arg("src"), py::arg("tgt"), py::arg("rcond") = kDefaultConvertRcond)
      .def("save", [](const SpeakerFactorization &f, const std::filesystem::path &d) {
             save_factorization(f, d);
           }, py::arg("directory"));
  m.def("load_factorization",
        [](const std::filesystem::path &d) { return load_factorization(d); },
        py::arg("directory"));
  m.def("stack_aligned",
        [](const std::vector<Matrix> &s) { return stack_aligned(to_features(s)); },
        py::arg("speakers"));
  m.def("assemble_block",
        [](const std::vector<Matrix> &s, Index pivot, Index k_match, unsigned threads) {
          return assemble_block(to_features(s), pivot, k_match, threads).block;
        },
        py::arg("speakers"), py::arg("pivot") = 0, py::arg("k_match") = 1, py::arg("threads") = 0);
  m.def("factorize",
        [](const Matrix &block, std::vector<std::string> ids, Index d, Index r,
           std::string pivot) { return factorize(block, std::move(ids), d, r, std::move(pivot)); },
        py::arg("block"), py::arg("speaker_ids"), py::arg("content_dim"),
        py::arg("rank") = kDefaultRank, py::arg("pivot") = "");

  m.def("wer",
        [](const std::string &ref, const std::string &hyp) { return wer(ref, hyp, ErrorUnit::kWord); },
        py::arg("reference"), py::arg("hypothesis"));
  m.def("cer",
        [](const std::string &ref, const std::string &hyp) { return wer(ref, hyp, ErrorUnit::kChar); },
        py::arg("reference"), py::arg("hypothesis"));
  m.def("eer",
        [](std::vector<double> genuine, std::vector<double> impostor) {
          return eer(ScoreSet{std::move(genuine), std::move(impostor)});
        },
        py::arg("genuine"), py::arg("impostor"));
  m.def("normalize_text", &normalize_text, py::arg("text"));

  m.def("generate",
        [](Index n_frames, Index d, Index r_true, Index k_speakers, Index classes, double noise,
           const std::string &family, std::uint64_t seed) {
          SynthSpec spec;
          spec.n_frames = n_frames;
          spec.d = d;
          spec.r_true = r_true;
          spec.k_speakers = k_speakers;
          spec.n_content_classes = classes;
          spec.noise_sigma = noise;
          spec.transform_family = parse_transform_family(family);
          spec.seed = seed;
          SynthData data = generate(spec);
          py::list speakers;
          for (const auto &s : data.speakers) speakers.append(s.values());
          py::dict truth;
          truth["content_points"] = data.truth.content_points;
          truth["content_labels"] = data.truth.content_labels;
          truth["speaker_transforms"] = data.truth.speaker_transforms;
          truth["speaker_biases"] = data.truth.speaker_biases;
          return py::make_tuple(speakers, truth);
        },
        py::arg("n_frames") = 2000, py::arg("d") = 64, py::arg("r_true") = 8,
        py::arg("k_speakers") = 4, py::arg("classes") = 20, py::arg("noise") = 0.01,
        py::arg("family") = "orthogonal", py::arg("seed") = 17);
}
