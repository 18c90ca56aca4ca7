#include "wadebench/cli.hpp"

#include "wadebench/corpus.hpp"
#include "wadebench/errors.hpp"
#include "wadebench/evalserve.hpp"
#include "wadebench/harness.hpp"
#include "wadebench/metric.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <optional>

namespace wadebench::cli {

namespace {

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by `run` and `sweep`; unset ones leave the plan untouched.
struct PlanFlags {
    std::string plan_file;
    std::string tasks, models, cadence, checkpoints, out;
    std::optional<int> rule;
    std::optional<int> runs, epochs, threads;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> count;
    bool quiet = false;

    void add_to(CLI::App* app, bool with_models)
    {
        app->add_option("plan", plan_file, "Experiment plan file (key = value lines)");
        app->add_option("--task", tasks, "Task ids, comma separated (e.g. 1,5)");
        if (with_models) {
            app->add_option("--model", models, "Models, comma separated: esn, reca, reca:<rule>, rnn, lstm");
            app->add_option("--rule", rule, "Rule used for a bare 'reca' model")->check(CLI::Range(0, 255));
        }
        app->add_option("--runs", runs, "Seeded runs per task (default 10)")->check(CLI::PositiveNumber);
        app->add_option("--seed", seed, "Base seed (default 0)");
        app->add_option("--count", count, "Sequences per run before the 80/20 split (default 1200)");
        app->add_option("--cadence", cadence, "Evaluation cadence 'E' or 'E:U:S' (default 10:100:50)");
        app->add_option("--checkpoints", checkpoints, "Checkpoint count or comma list (default 10)");
        app->add_option("--epochs", epochs, "Baseline passes over the training set (default 10)");
        app->add_option("--threads", threads, "Worker threads (default 1)")->check(CLI::PositiveNumber);
        app->add_option("--out", out, "Directory for records, curve CSVs and aggregate tables");
        app->add_flag("--quiet", quiet, "Suppress per-run progress lines");
    }

    harness::ExperimentPlan plan() const
    {
        KeyValueConfig c = plan_file.empty() ? KeyValueConfig{} : KeyValueConfig::load(plan_file);
        if (!tasks.empty()) c.set("tasks", tasks);
        if (!models.empty()) {
            std::string expanded;
            for (const auto& m : split_list(models)) {
                std::string name = m;
                if (m == "reca") {
                    if (!rule) throw usage_error("model 'reca' needs --rule");
                    name = "reca:" + std::to_string(*rule);
                }
                expanded += (expanded.empty() ? "" : ",") + name;
            }
            c.set("models", expanded);
        } else if (rule) {
            c.set("models", "reca:" + std::to_string(*rule));
        }
        if (runs) c.set("runs", std::to_string(*runs));
        if (seed) c.set("seed", std::to_string(*seed));
        if (count) c.set("sequences", std::to_string(*count));
        if (!cadence.empty()) c.set("cadence", cadence);
        if (!checkpoints.empty()) c.set("checkpoints", checkpoints);
        if (epochs) c.set("epochs", std::to_string(*epochs));
        if (threads) c.set("threads", std::to_string(*threads));
        if (!out.empty()) c.set("out", out);
        return harness::ExperimentPlan::from_config(c);
    }
};

metric::CheckpointSet parse_checkpoints(const std::string& text)
{
    if (text.empty()) return metric::CheckpointSet::standard();
    KeyValueConfig c;
    c.set("checkpoints", text);
    return harness::ExperimentPlan::from_config(c).checkpoints;
}

// Decimal text that always reads as a real number ("1.0", not "1").
std::string real_text(double x)
{
    std::string s = format_double(x);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

harness::Progress progress_printer(std::ostream& err, bool quiet, std::size_t total)
{
    if (quiet) return {};
    auto done = std::make_shared<std::size_t>(0);
    return [&err, done, total](const harness::RunRecord& r) {
        ++*done;
        err << fmt::format("info: [{}/{}] task {} {} run {}: wade={:.4f} max_acc={:.4f} ({:.1f}s){}\n", *done, total,
                           r.task, r.model, r.run, r.wade, r.max_accuracy, r.wall_clock_s,
                           r.status == "ok" ? "" : " FAILED: " + r.error);
    };
}

int cmd_gen(int task, std::uint64_t seed, std::size_t count, double split_ratio, const std::string& out_path,
            std::ostream& out)
{
    auto ds = corpus::generate(corpus::TaskSpec::defaults(task), seed, count);
    if (split_ratio > 0.0) ds = corpus::split(std::move(ds), split_ratio, seed);
    if (out_path.empty() || out_path == "-") {
        corpus::write_dataset(out, ds);
        return 0;
    }
    std::ofstream f(out_path);
    if (!f) throw io_error("cannot write " + out_path);
    corpus::write_dataset(f, ds);
    if (!f) throw io_error("failed writing " + out_path);
    return 0;
}

int cmd_run(const PlanFlags& flags, std::ostream& out, std::ostream& err)
{
    const auto plan = flags.plan();
    const auto total = plan.tasks.size() * plan.models.size() * static_cast<std::size_t>(plan.runs);
    const auto records = harness::run_experiment(plan, progress_printer(err, flags.quiet, total));
    if (!plan.out.empty()) harness::export_records(records, plan.out);
    out << harness::format_table(harness::aggregate(records));
    if (!plan.out.empty()) out << "records written to " << plan.out << '\n';
    return 0;
}

int cmd_sweep(const PlanFlags& flags, const std::string& rules_text, std::ostream& out, std::ostream& err)
{
    const auto plan = flags.plan();
    const auto rules = harness::parse_rule_set(rules_text);
    const auto total = plan.tasks.size() * rules.size() * static_cast<std::size_t>(plan.runs);
    std::vector<harness::RunRecord> records;
    const auto results = harness::sweep_rules(plan, rules, &records, progress_printer(err, flags.quiet, total));
    for (const auto& s : results) {
        out << fmt::format("task {}: best rule {} (mean wade {:.4f} over {} runs)\n", s.task, s.best_rule,
                           s.best_mean_wade, plan.runs);
        auto ranked = s.scores;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.mean_wade > b.mean_wade; });
        for (std::size_t i = 0; i < std::min<std::size_t>(10, ranked.size()); ++i)
            out << fmt::format("  {:>3}  {:.4f}\n", ranked[i].rule, ranked[i].mean_wade);
    }
    if (!plan.out.empty()) {
        harness::export_records(records, plan.out);
        const auto path = std::filesystem::path(plan.out) / "sweep.csv";
        std::ofstream f(path);
        if (!f) throw io_error("cannot write " + path.string());
        f << "task,rule,mean_wade,best\n";
        for (const auto& s : results)
            for (const auto& sc : s.scores)
                f << s.task << ',' << sc.rule << ',' << format_double(sc.mean_wade) << ','
                  << (sc.rule == s.best_rule ? 1 : 0) << '\n';
        out << "records written to " << plan.out << '\n';
    }
    return 0;
}

int cmd_serve(const std::string& host, int port, std::uint64_t seed, const std::string& transcript,
              const std::string& tasks, std::ostream& out)
{
    evalserve::ServiceConfig config;
    config.seed = seed;
    if (!transcript.empty()) config.transcript = transcript;
    if (!tasks.empty()) {
        config.session.tasks.clear();
        for (const auto& t : split_list(tasks)) config.session.tasks.push_back(static_cast<int>(parse_int(t, "task")));
    }
    evalserve::EvalService service(config);
    out << "listening on http://" << host << ':' << port << std::endl;
    service.listen(host, port);
    return 0;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Learning-efficiency benchmark workbench: task generation, reservoir and baseline training, "
                 "WADE scoring, reports and the human-evaluation service.",
                 "wadebench"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "Generate a task dataset");
    int gen_task = 1;
    std::uint64_t gen_seed = 0;
    std::size_t gen_count = 1200;
    double gen_split = 0.0;
    std::string gen_out;
    gen->add_option("--task", gen_task, "Task id 1-10")->check(CLI::Range(1, corpus::num_tasks))->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed")->capture_default_str();
    gen->add_option("--count", gen_count, "Number of sequences")->capture_default_str();
    gen->add_option("--split", gen_split, "Also record a train/test split with this train fraction")
        ->check(CLI::Range(0.0, 1.0));
    gen->add_option("--out", gen_out, "Output file (default: standard output)");

    auto* run = app.add_subcommand("run", "Run an experiment plan and print the aggregate table");
    PlanFlags run_flags;
    run_flags.add_to(run, true);

    auto* sweep = app.add_subcommand("sweep", "Sweep elementary CA rules and report the best per task");
    PlanFlags sweep_flags;
    std::string sweep_rules = "0-255";
    sweep_flags.add_to(sweep, false);
    sweep->add_option("--rule", sweep_rules, "Rule set, e.g. 0-255 or 30,54,110")->capture_default_str();

    auto* wade = app.add_subcommand("wade", "Print the WADE score of an accuracy-curve CSV");
    std::string curve_file, wade_checkpoints;
    wade->add_option("curve", curve_file, "CSV with header step,accuracy")->required();
    wade->add_option("--checkpoints", wade_checkpoints, "Checkpoint count or comma list (default 10)");

    auto* report = app.add_subcommand("report", "Print the aggregate table of a records file");
    std::string records_file;
    bool report_csv = false;
    report->add_option("records", records_file, "records.jsonl written by run or sweep")->required();
    report->add_flag("--csv", report_csv, "Print CSV instead of the aligned table");

    auto* serve = app.add_subcommand("serve", "Start the human-evaluation HTTP service");
    int serve_port = 8080;
    std::string serve_host = "127.0.0.1", serve_transcript, serve_tasks;
    std::uint64_t serve_seed = 0;
    serve->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535))->capture_default_str();
    serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
    serve->add_option("--seed", serve_seed, "Seed for sessions")->capture_default_str();
    serve->add_option("--transcript", serve_transcript, "Append-only session log for replay");
    serve->add_option("--task", serve_tasks, "Task pool, comma separated (default 1-10)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error[usage]: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*gen) return cmd_gen(gen_task, gen_seed, gen_count, gen_split, gen_out, out);
        if (*run) return cmd_run(run_flags, out, err);
        if (*sweep) return cmd_sweep(sweep_flags, sweep_rules, out, err);
        if (*wade) {
            out << real_text(metric::wade_from_file(curve_file, parse_checkpoints(wade_checkpoints))) << '\n';
            return 0;
        }
        if (*report) {
            const auto rows = harness::aggregate(harness::read_records(records_file));
            if (report_csv)
                harness::write_aggregate_csv(out, rows);
            else
                out << harness::format_table(rows);
            return 0;
        }
        if (*serve) return cmd_serve(serve_host, serve_port, serve_seed, serve_transcript, serve_tasks, out);
    } catch (const usage_error& e) {
        err << "error[usage]: " << e.what() << '\n';
        return 2;
    } catch (const error& e) {
        err << "error[" << e.code() << "]: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error[internal]: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int main(int argc, const char* const* argv)
{
    return main(argc, argv, std::cout, std::cerr);
}

}  // namespace wadebench::cli
