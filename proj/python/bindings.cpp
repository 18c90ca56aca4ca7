#include "wadebench/baseline.hpp"
#include "wadebench/config.hpp"
#include "wadebench/corpus.hpp"
#include "wadebench/errors.hpp"
#include "wadebench/evalserve.hpp"
#include "wadebench/harness.hpp"
#include "wadebench/metric.hpp"
#include "wadebench/reservoir.hpp"

#include <nlohmann/json.hpp>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace wadebench;

namespace {

metric::AccuracyCurve to_curve(const std::vector<std::pair<std::int64_t, double>>& points)
{
    metric::AccuracyCurve curve;
    for (const auto& [step, accuracy] : points) curve.push_back({step, accuracy});
    return curve;
}

metric::CheckpointSet to_checkpoints(const std::optional<std::vector<double>>& thresholds)
{
    return thresholds ? metric::CheckpointSet(*thresholds) : metric::CheckpointSet::standard();
}

harness::ExperimentPlan to_plan(const std::string& text)
{
    return harness::ExperimentPlan::from_config(KeyValueConfig::parse(text));
}

std::vector<std::string> records_to_json(const std::vector<harness::RunRecord>& records)
{
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.to_json().dump());
    return out;
}

std::vector<harness::RunRecord> records_from_json(const std::vector<std::string>& lines)
{
    std::vector<harness::RunRecord> out;
    out.reserve(lines.size());
    for (const auto& line : lines) out.push_back(harness::RunRecord::from_json(nlohmann::json::parse(line)));
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Native core of the wadebench learning-efficiency workbench";
    py::register_exception<error>(m, "Error", PyExc_RuntimeError);

    m.def(
      "wade",
      [](const std::vector<std::pair<std::int64_t, double>>& curve, const std::optional<std::vector<double>>& checkpoints) {
          return metric::wade(to_curve(curve), to_checkpoints(checkpoints));
      },
      py::arg("curve"), py::arg("checkpoints") = py::none(),
      "WADE of a learning curve given as (step, accuracy) pairs.");

    m.def(
      "wade_from_file",
      [](const std::string& path, const std::optional<std::vector<double>>& checkpoints) {
          return metric::wade_from_file(path, to_checkpoints(checkpoints));
      },
      py::arg("path"), py::arg("checkpoints") = py::none());

    m.def(
      "generate",
      [](int task, std::uint64_t seed, std::size_t count) {
          const auto dataset = corpus::generate(corpus::TaskSpec::defaults(task), seed, count);
          py::list samples;
          for (const auto& s : dataset.samples)
              samples.append(py::make_tuple(dataset.vocabulary.decode(s.tokens), s.mask));
          return samples;
      },
      py::arg("task"), py::arg("seed"), py::arg("count"),
      "Generate `count` samples of a task as (tokens, mask) pairs.");

    m.def(
      "vocabulary", [](int task) { return corpus::task_vocabulary(corpus::TaskSpec::defaults(task)).tokens(); },
      py::arg("task"));

    m.def(
      "count_oracle",
      [](const std::vector<std::string>& tokens, const std::vector<std::string>& query) {
          return corpus::count_oracle(tokens, query);
      },
      py::arg("tokens"), py::arg("query"));

    m.def(
      "rule_table",
      [](int rule) {
          const auto t = reservoir::rule_table(rule);
          return std::vector<int>(t.begin(), t.end());
      },
      py::arg("rule"));

    m.def(
      "ca_step",
      [](const std::vector<std::uint8_t>& grid, int rule) { return reservoir::ca_step(grid, rule); },
      py::arg("grid"), py::arg("rule"));

    m.def("match_hidden_size", &baseline::match_hidden_size, py::arg("vocabulary"), py::arg("target"));
    m.def("match_lstm_hidden_size", &baseline::match_lstm_hidden_size, py::arg("vocabulary"), py::arg("target"));

    m.def(
      "run_experiment",
      [](const std::string& plan) {
          harness::ExperimentPlan p = to_plan(plan);
          std::vector<harness::RunRecord> records;
          {
              py::gil_scoped_release release;
              records = harness::run_experiment(p);
          }
          return records_to_json(records);
      },
      py::arg("plan"), "Run an experiment plan (key = value text); returns one JSON record per run.");

    m.def(
      "format_table",
      [](const std::vector<std::string>& records) {
          const auto rows = harness::aggregate(records_from_json(records));
          return harness::format_table(rows);
      },
      py::arg("records"));

    py::class_<evalserve::EvalService>(m, "EvalService")
      .def(py::init([](std::uint64_t seed) { return std::make_unique<evalserve::EvalService>(evalserve::ServiceConfig{seed, {}, {}}); }),
           py::arg("seed") = 0)
      .def(
        "handle",
        [](evalserve::EvalService& s, const std::string& method, const std::string& path, const std::string& body) {
            const auto reply = s.handle(method, path, body);
            return py::make_tuple(reply.status, reply.body);
        },
        py::arg("method"), py::arg("path"), py::arg("body") = "")
      .def("start", &evalserve::EvalService::start, py::arg("host") = "127.0.0.1", py::arg("port") = 0,
           py::call_guard<py::gil_scoped_release>())
      .def("stop", &evalserve::EvalService::stop, py::call_guard<py::gil_scoped_release>());
}
