#pragma once

// Experiment orchestration: seeding, splits, evaluation cadence, multi-seed
// aggregation, CA-rule sweeps and result persistence.

#include "wadebench/config.hpp"
#include "wadebench/corpus.hpp"
#include "wadebench/metric.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wadebench::harness {

/// Model names: "esn", "reca:<rule>", "rnn", "lstm".
void validate_model_name(const std::string& model);

struct ExperimentPlan {
    std::vector<int> tasks{1};
    std::vector<std::string> models{"esn"};
    std::size_t sequences = 1200;
    double train_ratio = 0.8;
    int runs = 10;
    /// Passes over the training set for the fully-trained baselines
    /// (reservoir readouts always see each training sequence once).
    int epochs = 10;
    metric::Cadence cadence;
    metric::CheckpointSet checkpoints = metric::CheckpointSet::standard();
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out;
    /// Pass-through model and task settings: "esn.*", "ca.*", "readout.*",
    /// "adam.*", "task<N>.*".
    KeyValueConfig extra;

    void validate() const;
    /// Keys: tasks, models, sequences, train_ratio, runs, epochs, cadence,
    /// checkpoints (a count or a list), seed, threads, out, plus extras.
    static ExperimentPlan from_config(const KeyValueConfig& config);
    KeyValueConfig to_config() const;

    corpus::TaskSpec task_spec(int task) const;
};

std::uint64_t data_seed(const ExperimentPlan& plan, int task, int run);
std::uint64_t weight_seed(const ExperimentPlan& plan, int task, const std::string& model, int run);

struct RunRecord {
    int task = 0;
    std::string model;
    int run = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t weight_seed = 0;
    /// Canonical key-value text of everything that shaped the run.
    std::string config;
    std::string fingerprint;
    /// What a curve step counts.
    std::string step_unit = "training_sequences";
    metric::AccuracyCurve curve;
    std::vector<double> checkpoints;
    double wade = 0.0;
    double max_accuracy = 0.0;
    double initial_accuracy = 0.0;
    std::int64_t train_sequences = 0;
    std::string status = "ok";
    std::string error;
    double wall_clock_s = 0.0;

    nlohmann::json to_json() const;
    static RunRecord from_json(const nlohmann::json& j);

    /// Equality ignoring wall-clock time.
    bool same_result(const RunRecord& other) const;
    bool operator==(const RunRecord&) const = default;
};

using Progress = std::function<void(const RunRecord&)>;

/// Every (task, run, model) combination. Models of the same (task, run) share
/// one generated dataset and split. Run failures are recorded, not thrown.
/// Records come back ordered by task, run, then model.
std::vector<RunRecord> run_experiment(const ExperimentPlan& plan, const Progress& progress = {});

struct RuleScore {
    int rule = 0;
    double mean_wade = 0.0;
};

struct SweepResult {
    int task = 0;
    int best_rule = 0;
    double best_mean_wade = 0.0;
    std::vector<RuleScore> scores;
};

/// Mean WADE per rule and task (the plan's models are ignored); the best rule
/// maximizes it, ties going to the lower rule number. Throws config_error for
/// an empty or out-of-range rule set.
std::vector<SweepResult> sweep_rules(const ExperimentPlan& plan, std::span<const int> rules,
                                     std::vector<RunRecord>* records = nullptr, const Progress& progress = {});

/// Parses "0-255", "30,54,110" or mixtures like "0-3,110".
std::vector<int> parse_rule_set(std::string_view text);

struct AggregateRow {
    int task = 0;
    std::string model;
    std::size_t runs = 0;
    std::size_t failures = 0;
    double wade_mean = 0.0;
    double wade_std = 0.0;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
};

/// Per (task, model) mean and population standard deviation over runs, in
/// order of first appearance.
std::vector<AggregateRow> aggregate(std::span<const RunRecord> records);
void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows);
/// Tasks as rows, models as columns, "mean±std" cells; one block for WADE
/// and one for max accuracy.
std::string format_table(std::span<const AggregateRow> rows);

void write_records(std::ostream& out, std::span<const RunRecord> records);
std::vector<RunRecord> read_records(std::istream& in);
std::vector<RunRecord> read_records(const std::filesystem::path& path);

/// File name of a record's curve CSV, e.g. "task1_reca-110_run3.csv".
std::string curve_file_name(const RunRecord& record);

/// Writes records.jsonl, curves/<name>.csv per record and the aggregate CSV
/// into `dir` (created if needed). Throws io_error on failure.
void export_records(std::span<const RunRecord> records, const std::filesystem::path& dir);

}  // namespace wadebench::harness
