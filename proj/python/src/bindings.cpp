/*
 * Copyright 2026 The LabelDenoise Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ldn/analysis/analysis.hpp"
#include "ldn/cli/cli.hpp"
#include "ldn/distill/distill.hpp"
#include "ldn/error.hpp"
#include "ldn/framefeat/framefeat.hpp"
#include "ldn/lossmetrics/metrics.hpp"
#include "ldn/models/model.hpp"

namespace py = pybind11;
using ldn::diff::Tensor;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
// video id -> [(label, score), ...] sorted by score descending.
using PyPredictions = std::map<std::string, std::vector<std::pair<std::uint32_t, double>>>;

Tensor to_matrix(const Array& a) {
  if (a.ndim() != 2) throw ldn::InputError("expected a 2-d array");
  const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
  return Tensor({r, c}, std::vector<double>(a.data(), a.data() + r * c));
}

Array to_array(const Tensor& t) {
  Array out({t.dim(0), t.dim(1)});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<ldn::data::PredictionList> to_lists(const PyPredictions& p) {
  std::vector<ldn::data::PredictionList> out;
  for (const auto& [id, entries] : p) {
    ldn::data::PredictionList l{id, {}};
    for (const auto& [label, score] : entries) l.entries.push_back({label, score});
    ldn::data::validate(l);
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<ldn::train::SoftLabelMatrix> to_soft(const std::vector<Array>& mats,
                                                  const std::vector<std::string>& ids) {
  std::vector<ldn::train::SoftLabelMatrix> out;
  for (const auto& m : mats) out.push_back({ids, to_matrix(m)});
  return out;
}

}  // namespace

PYBIND11_MODULE(_ldn, m) {
  m.doc() = "LabelDenoise core: GAP, ensembling, distillation helpers, analysis, CLI";
  auto input_error = py::register_exception<ldn::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ldn::FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ldn::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  (void)input_error;

  m.def(
      "gap_at_n",
      [](const PyPredictions& predictions, const ldn::loss::GroundTruth& truth, std::size_t n) {
        return ldn::loss::gap_at_n(to_lists(predictions), truth, n);
      },
      py::arg("predictions"), py::arg("truth"), py::arg("n") = 20,
      "Pooled GAP@n. predictions: {video: [(label, score), ...]} sorted by score.");

  m.def(
      "gap_at_n_matrix",
      [](const Array& scores, const std::vector<std::string>& ids, const ldn::loss::GroundTruth& truth,
         std::size_t n) { return ldn::loss::gap_at_n(to_matrix(scores), ids, truth, n); },
      py::arg("scores"), py::arg("ids"), py::arg("truth"), py::arg("n") = 20);

  m.def(
      "mix_rows",
      [](const Array& x, const std::vector<std::size_t>& partner, const std::vector<double>& lambda) {
        return to_array(ldn::train::mix_rows(to_matrix(x), partner, lambda));
      },
      py::arg("x"), py::arg("partner"), py::arg("lam"),
      "lam[i] * x[i] + (1 - lam[i]) * x[partner[i]] for every row.");

  m.def(
      "segment_scenes",
      [](const Array& frames, double tau) { return ldn::frame::segment_scenes(to_matrix(frames), tau).boundaries; },
      py::arg("frames"), py::arg("tau") = 0.2, "Scene start frames (always starts with 0).");

  m.def(
      "fit_ensemble_weights",
      [](const std::vector<Array>& matrices, const std::vector<std::string>& ids,
         const ldn::loss::GroundTruth& truth, std::size_t n) {
        const auto w = ldn::distill::fit_ensemble_weights(to_soft(matrices, ids), truth, n);
        py::dict d;
        d["weights"] = w.weights;
        d["gap"] = w.gap;
        d["singleton_gaps"] = w.singleton_gaps;
        d["moves"] = w.moves;
        return d;
      },
      py::arg("matrices"), py::arg("ids"), py::arg("truth"), py::arg("n") = 20);

  m.def(
      "combine",
      [](const std::vector<Array>& matrices, const std::vector<double>& weights) {
        std::vector<std::string> ids;
        if (!matrices.empty())
          for (py::ssize_t i = 0; i < matrices[0].shape(0); ++i) ids.push_back(std::to_string(i));
        return to_array(ldn::distill::combine(to_soft(matrices, ids), weights).values);
      },
      py::arg("matrices"), py::arg("weights"));

  m.def(
      "error_taxonomy",
      [](const PyPredictions& predictions, const ldn::loss::GroundTruth& truth, std::uint32_t vocabulary_size,
         std::size_t top_n) {
        const auto t = ldn::analysis::error_taxonomy(to_lists(predictions), truth, vocabulary_size, top_n);
        std::map<std::string, std::map<std::uint32_t, std::string>> out;
        for (const auto& [id, classes] : t.classes)
          for (const auto& [label, c] : classes) out[id][label] = ldn::analysis::class_name(c);
        return out;
      },
      py::arg("predictions"), py::arg("truth"), py::arg("vocabulary_size"), py::arg("top_n") = 20,
      "{video: {label: 'TP' | 'FP' | 'FN'}}");

  m.def(
      "gradcheck_suite",
      [](std::uint64_t seed) {
        std::vector<std::pair<std::string, double>> out;
        for (const auto& nc : ldn::cli::gradcheck_suite())
          out.emplace_back(nc.name, ldn::models::gradcheck(nc.config, seed).max_relative_error);
        return out;
      },
      py::arg("seed") = 17, "[(architecture, max relative error)]");

  m.def(
      "run_command",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = ldn::cli::run_command(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI invocation in process; returns (exit_code, stdout, stderr).");
}
