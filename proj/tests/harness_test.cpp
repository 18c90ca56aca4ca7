#include "wadebench/errors.hpp"
#include "wadebench/harness.hpp"
#include "wadebench/metric.hpp"

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wadebench;
using namespace wadebench::harness;
namespace fs = std::filesystem;

namespace {

// A plan small enough to run in well under a second.
ExperimentPlan small_plan()
{
    ExperimentPlan p;
    p.tasks = {1};
    p.models = {"esn", "reca:110", "rnn"};
    p.sequences = 40;
    p.runs = 2;
    p.epochs = 1;
    p.cadence = metric::Cadence::parse("4");
    p.extra.set("esn.K", "40");
    p.extra.set("ca.n", "24");
    p.extra.set("baseline.target", "200");
    return p;
}

fs::path scratch_dir(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("wadebench_harness_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Harness, OneRecordPerTaskModelAndRun)
{
    const auto plan = small_plan();
    const auto records = run_experiment(plan);
    ASSERT_EQ(records.size(), 6u);
    for (const auto& r : records) {
        EXPECT_EQ(r.status, "ok") << r.error;
        EXPECT_EQ(r.step_unit, "training_sequences");
        EXPECT_EQ(r.data_seed, data_seed(plan, r.task, r.run));
        EXPECT_EQ(r.weight_seed, weight_seed(plan, r.task, r.model, r.run));
        EXPECT_EQ(r.wade, metric::wade(r.curve, plan.checkpoints));
        EXPECT_EQ(r.max_accuracy, r.curve.max_accuracy());
        EXPECT_EQ(r.fingerprint.size(), 16u);
        EXPECT_NE(r.config.find("plan.sequences=40"), std::string::npos);
        EXPECT_NE(r.config.find("task.id=1"), std::string::npos);
    }
}

TEST(Harness, ModelsInARunShareTheirData)
{
    const auto plan = small_plan();
    const auto records = run_experiment(plan);
    for (const auto& a : records)
        for (const auto& b : records) {
            if (a.run == b.run) EXPECT_EQ(a.data_seed, b.data_seed);
            if (a.run != b.run) EXPECT_NE(a.data_seed, b.data_seed);
            if (a.model != b.model) EXPECT_NE(a.weight_seed, b.weight_seed);
        }
}

TEST(Harness, RerunsReproduceRecordsExactly)
{
    auto plan = small_plan();
    const auto a = run_experiment(plan);
    const auto b = run_experiment(plan);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].same_result(b[i])) << a[i].model;

    plan.threads = 3;
    const auto c = run_experiment(plan);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_TRUE(a[i].same_result(c[i])) << a[i].model;
}

TEST(Harness, RunsAreIsolatedFromPlanShape)
{
    auto plan = small_plan();
    const auto full = run_experiment(plan);
    plan.runs = 1;
    plan.models = {"rnn"};
    const auto single = run_experiment(plan);
    ASSERT_EQ(single.size(), 1u);
    const auto it = std::find_if(full.begin(), full.end(),
                                 [](const RunRecord& r) { return r.model == "rnn" && r.run == 0; });
    ASSERT_NE(it, full.end());
    EXPECT_TRUE(it->same_result(single[0]));

    plan.seed = 1;
    EXPECT_NE(run_experiment(plan)[0].data_seed, single[0].data_seed);
}

TEST(Harness, EvaluationCadenceDoesNotChangeTraining)
{
    auto plan = small_plan();
    plan.runs = 1;
    const auto coarse = run_experiment(plan);
    plan.cadence = metric::Cadence::parse("1");
    const auto dense = run_experiment(plan);
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        // Every coarse point appears unchanged in the dense curve.
        const auto& pts = dense[i].curve.points();
        for (const auto& p : coarse[i].curve.points())
            EXPECT_NE(std::find(pts.begin(), pts.end(), p), pts.end()) << coarse[i].model << " step " << p.step;
        EXPECT_EQ(coarse[i].curve.points().back(), pts.back());
        EXPECT_GE(dense[i].max_accuracy, coarse[i].max_accuracy);
    }
}

TEST(Harness, TrainingSequenceAccounting)
{
    ExperimentPlan plan;
    plan.models = {"esn", "rnn"};
    plan.runs = 1;
    plan.cadence = metric::Cadence::parse("5000");
    plan.extra.set("esn.K", "10");
    plan.extra.set("baseline.target", "30");
    const auto records = run_experiment(plan);
    ASSERT_EQ(records.size(), 2u);
    EXPECT_EQ(records[0].train_sequences, 960);
    EXPECT_EQ(records[1].train_sequences, 9600);
    EXPECT_EQ(records[0].curve.points().back().step, 960);
    EXPECT_EQ(records[1].curve.points().back().step, 9600);
}

TEST(Harness, ZeroEpochBaselineHasEmptyCurve)
{
    auto plan = small_plan();
    plan.models = {"lstm"};
    plan.runs = 1;
    plan.epochs = 0;
    const auto r = run_experiment(plan).at(0);
    EXPECT_TRUE(r.curve.empty());
    EXPECT_EQ(r.wade, 0.0);
    EXPECT_GT(r.initial_accuracy, 0.0);
}

TEST(Harness, PlanParsingAndValidation)
{
    const auto plan = ExperimentPlan::from_config(KeyValueConfig::parse(
      "tasks = 1,5\nmodels = esn, reca:30\nruns = 3\ncadence = 5\ncheckpoints = 0.5,1.0\nesn.K = 100\n"));
    EXPECT_EQ(plan.tasks, (std::vector<int>{1, 5}));
    EXPECT_EQ(plan.models, (std::vector<std::string>{"esn", "reca:30"}));
    EXPECT_EQ(plan.runs, 3);
    EXPECT_EQ(plan.checkpoints.thresholds(), (std::vector<double>{0.5, 1.0}));
    EXPECT_EQ(plan.extra.get_string("esn.K", ""), "100");
    const auto back = ExperimentPlan::from_config(plan.to_config());
    EXPECT_EQ(back.to_config().values(), plan.to_config().values());

    EXPECT_THROW(ExperimentPlan::from_config(KeyValueConfig::parse("bogus = 1\n")), config_error);
    EXPECT_THROW(ExperimentPlan::from_config(KeyValueConfig::parse("models = gru\n")), config_error);
    EXPECT_THROW(ExperimentPlan::from_config(KeyValueConfig::parse("models = reca:300\n")), config_error);
    EXPECT_THROW(ExperimentPlan::from_config(KeyValueConfig::parse("tasks = 11\n")), config_error);
    EXPECT_THROW(ExperimentPlan::from_config(KeyValueConfig::parse("runs = 0\n")), config_error);
}

TEST(Sweep, RuleSetsAndArgmax)
{
    auto plan = small_plan();
    plan.models = {};
    EXPECT_EQ(parse_rule_set("0-3,110, 2"), (std::vector<int>{0, 1, 2, 3, 110, 2}));
    EXPECT_EQ(parse_rule_set("0-255").size(), 256u);
    EXPECT_THROW(parse_rule_set("5-3"), config_error);
    EXPECT_THROW(parse_rule_set("256"), config_error);
    EXPECT_THROW(sweep_rules(plan, std::vector<int>{}), config_error);

    const auto single = sweep_rules(plan, std::vector<int>{0});
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0].best_rule, 0);

    std::vector<RunRecord> records;
    const std::vector<int> rules{110, 30, 90, 30};
    const auto res = sweep_rules(plan, rules, &records);
    ASSERT_EQ(res[0].scores.size(), 3u);
    EXPECT_EQ(records.size(), 3u * 2u);
    double best = -1;
    int best_rule = -1;
    for (const auto& s : res[0].scores) {
        // Mean over the sweep's own records.
        double sum = 0;
        int n = 0;
        for (const auto& r : records)
            if (r.model == "reca:" + std::to_string(s.rule)) {
                sum += r.wade;
                ++n;
            }
        EXPECT_DOUBLE_EQ(s.mean_wade, sum / n);
        if (s.mean_wade > best) {
            best = s.mean_wade;
            best_rule = s.rule;
        }
    }
    EXPECT_EQ(res[0].best_rule, best_rule);
    EXPECT_EQ(res[0].best_mean_wade, best);
}

TEST(Aggregate, PopulationMeanAndStd)
{
    RunRecord a, b, c;
    a.task = b.task = c.task = 1;
    a.model = b.model = "esn";
    c.model = "rnn";
    a.wade = 0.2;
    b.wade = 0.4;
    b.status = "failed";
    const std::vector<RunRecord> records{a, c, b};
    const auto rows = aggregate(records);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].model, "esn");
    EXPECT_EQ(rows[0].runs, 2u);
    EXPECT_EQ(rows[0].failures, 1u);
    EXPECT_NEAR(rows[0].wade_mean, 0.3, 1e-15);
    EXPECT_NEAR(rows[0].wade_std, 0.1, 1e-15);
    EXPECT_EQ(rows[1].runs, 1u);
    EXPECT_EQ(rows[1].wade_std, 0.0);

    const auto table = format_table(rows);
    EXPECT_NE(table.find("0.30±0.10"), std::string::npos) << table;
}

TEST(Records, JsonRoundTripIsExact)
{
    const auto records = run_experiment(small_plan());
    std::stringstream s;
    write_records(s, records);
    const auto back = read_records(s);
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i], records[i]);
    std::istringstream bad("{\"task\": 1}\nnot json\n");
    EXPECT_THROW(read_records(bad), format_error);
}

TEST(Records, ExportedCurvesRescoreBitForBit)
{
    const auto records = run_experiment(small_plan());
    const auto dir = scratch_dir("export");
    export_records(records, dir);
    EXPECT_TRUE(fs::exists(dir / "records.jsonl"));
    EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
    EXPECT_TRUE(fs::exists(dir / "aggregate.txt"));
    for (const auto& r : records) {
        const auto path = dir / "curves" / curve_file_name(r);
        ASSERT_TRUE(fs::exists(path)) << path;
        EXPECT_EQ(metric::wade_from_file(path, metric::CheckpointSet(r.checkpoints)), r.wade);
    }
    EXPECT_EQ(read_records(dir / "records.jsonl").size(), records.size());
    fs::remove_all(dir);
}

TEST(Records, CurveFileNames)
{
    RunRecord r;
    r.task = 1;
    r.model = "reca:110";
    r.run = 3;
    EXPECT_EQ(curve_file_name(r), "task1_reca-110_run3.csv");
}
