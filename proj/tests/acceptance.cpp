// Headline acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include "wadebench/baseline.hpp"
#include "wadebench/corpus.hpp"
#include "wadebench/harness.hpp"
#include "wadebench/metric.hpp"
#include "wadebench/reservoir.hpp"
#include "wadebench/rng.hpp"

#include "oracles.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

using namespace wadebench;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check)
{
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

// ---------------------------------------------------------------- metric ---

Outcome metric_correctness()
{
    using metric::AccuracyCurve;
    using RawCurve = std::vector<std::pair<std::int64_t, double>>;
    auto make = [](const RawCurve& raw) {
        AccuracyCurve c;
        for (auto [s, a] : raw) c.push_back({s, a});
        return c;
    };
    const double hand = metric::wade(make({{1, 0.2}, {2, 0.5}, {3, 0.5}, {4, 0.9}}));
    const double perfect = metric::wade(make({{1, 1.0}}));
    const double zero = metric::wade(make({{1, 0.0}, {10, 0.0}}));
    bool ok = std::abs(hand - 0.3) <= 1e-12 && perfect == 1.0 && zero == 0.0;

    const auto alphas = metric::CheckpointSet::standard().thresholds();
    Rng rng(20240601);
    int property_failures = 0;
    for (int i = 0; i < 1000; ++i) {
        RawCurve raw;
        std::int64_t step = 0;
        const int n = rng.uniform_int(0, 30);
        for (int k = 0; k < n; ++k) {
            step += rng.uniform_int(1, 50);
            raw.emplace_back(step, rng.coin(0.3) ? rng.uniform_int(0, 10) / 10.0 : rng.uniform01());
        }
        const double w = metric::wade(make(raw));
        RawCurve hi = raw, slow = raw;
        for (auto& [s, a] : hi) a = std::min(1.0, a + rng.uniform(0.0, 0.3));
        const int factor = rng.uniform_int(1, 5);
        for (auto& [s, a] : slow) s *= factor;
        const bool bounds = w >= 0.0 && w <= 1.0;
        const bool dominance = metric::wade(make(hi)) >= w;
        const bool dilation = metric::wade(make(slow)) <= w;
        const bool oracle = std::abs(w - oracles::naive_wade(raw, alphas)) <= 1e-12;
        property_failures += !(bounds && dominance && dilation && oracle);
    }
    ok = ok && property_failures == 0;
    return {ok, fmt::format("hand case {:.17g}, perfect {}, zero {}, property failures {}/1000", hand, perfect, zero,
                            property_failures)};
}

// ------------------------------------------------------------- reservoir ---

Outcome ca_fidelity()
{
    int table_cells = 0, table_bad = 0;
    for (int rule = 0; rule < 256; ++rule) {
        const auto t = reservoir::rule_table(rule);
        for (int k = 0; k < 8; ++k, ++table_cells) table_bad += t[static_cast<std::size_t>(k)] != ((rule >> k) & 1);
    }

    Rng rng(99);
    auto random_grid = [&](std::size_t n) {
        reservoir::Grid g(n);
        for (auto& c : g) c = static_cast<std::uint8_t>(rng.below(2));
        return g;
    };
    int step_bad = 0;
    for (int rule = 0; rule < 256; ++rule)
        for (int i = 0; i < 100; ++i) {
            const auto g = random_grid(12);
            step_bad += reservoir::ca_step(g, rule) != oracles::ca_reference(g, rule);
        }

    int involution_bad = 0, cone_bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(3, 100));
        const auto p = random_grid(n), s = random_grid(n);
        involution_bad += reservoir::inject(p, reservoir::inject(p, s)) != s;

        const int m = rng.uniform_int(8, 80);
        const int rule = static_cast<int>(rng.below(256));
        const int steps = rng.uniform_int(1, 6);
        auto a = random_grid(static_cast<std::size_t>(m));
        auto b = a;
        const int flipped = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
        b[static_cast<std::size_t>(flipped)] ^= 1;
        for (int k = 0; k < steps; ++k) {
            a = reservoir::ca_step(a, rule);
            b = reservoir::ca_step(b, rule);
        }
        bool inside = true;
        for (int c = 0; c < m; ++c) {
            const int d = std::min(std::abs(c - flipped), m - std::abs(c - flipped));
            if (d > steps && a[static_cast<std::size_t>(c)] != b[static_cast<std::size_t>(c)]) inside = false;
        }
        cone_bad += !inside;
    }
    const bool ok = table_cells == 2048 && table_bad == 0 && step_bad == 0 && involution_bad == 0 && cone_bad == 0;
    return {ok, fmt::format("rule-table mismatches {}/{}, ca_step mismatches {}/25600, involution failures {}/1000, "
                            "light-cone failures {}/1000",
                            table_bad, table_cells, step_bad, involution_bad, cone_bad)};
}

// -------------------------------------------------------------- baseline ---

Outcome gradient_fidelity()
{
    const auto start = Clock::now();
    Rng rng(4242);
    double worst_rnn = 0.0, worst_lstm = 0.0;
    for (int kind = 0; kind < 2; ++kind)
        for (int i = 0; i < 100; ++i) {
            const int L = rng.uniform_int(2, 4);
            const int h = rng.uniform_int(1, 5);
            std::unique_ptr<baseline::SequenceModel> m;
            if (kind == 0)
                m = std::make_unique<baseline::ElmanRnn>(h, static_cast<std::size_t>(L), rng.next());
            else
                m = std::make_unique<baseline::Lstm>(h, static_cast<std::size_t>(L), rng.next());
            for (auto& p : m->parameters())
                for (Eigen::Index k = 0; k < p.size(); ++k) p.data()[k] = rng.uniform(-0.8, 0.8);
            const int T = rng.uniform_int(2, 8);
            std::vector<corpus::TokenId> tokens;
            std::vector<std::uint8_t> mask;
            for (int t = 0; t < T; ++t) {
                tokens.push_back(static_cast<corpus::TokenId>(rng.below(static_cast<std::uint64_t>(L))));
                mask.push_back(static_cast<std::uint8_t>(rng.coin(0.6)));
            }
            mask[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(T)))] = 1;
            const auto analytic = m->gradient(tokens, mask).gradient;
            const auto numeric = oracles::finite_difference(*m, tokens, mask, 1e-4);
            const double err = oracles::max_relative_error(analytic, numeric);
            (kind == 0 ? worst_rnn : worst_lstm) = std::max(kind == 0 ? worst_rnn : worst_lstm, err);
        }
    const double elapsed = seconds_since(start);
    const bool ok = worst_rnn < 1e-4 && worst_lstm < 1e-4 && elapsed < 60.0;
    return {ok, fmt::format("max relative error rnn {:.2e}, lstm {:.2e} over 100 instances each, {:.2f}s", worst_rnn,
                            worst_lstm, elapsed)};
}

Outcome parameter_parity()
{
    const int h90 = baseline::match_hidden_size(5, 9000);
    bool ok = h90 == 90;
    std::string detail = fmt::format("match_hidden_size(5, 9000) = {};", h90);
    for (int task = 1; task <= corpus::num_tasks; ++task) {
        const auto L = static_cast<std::int64_t>(corpus::task_vocabulary(corpus::TaskSpec::defaults(task)).size());
        const auto m = baseline::make_model("rnn", static_cast<std::size_t>(L), 0);
        const std::int64_t gap = std::llabs(m->parameter_count() - 1800 * L);
        const bool within = gap <= 2 * m->hidden_size() + 1;
        ok = ok && within;
        detail += fmt::format(" t{}:L={},h={},gap={}", task, L, m->hidden_size(), gap);
    }
    return {ok, detail};
}

// ------------------------------------------------------------ reproduction ---

struct Summary {
    double wade_mean = 0.0;
    double final_accuracy_mean = 0.0;
    std::size_t runs = 0;
    std::size_t failed = 0;
};

Summary summarize(const std::vector<harness::RunRecord>& records, const std::string& model)
{
    Summary s;
    for (const auto& r : records) {
        if (r.model != model) continue;
        ++s.runs;
        s.failed += r.status != "ok";
        s.wade_mean += r.wade;
        s.final_accuracy_mean += r.curve.empty() ? r.initial_accuracy : r.curve.points().back().accuracy;
    }
    if (s.runs > 0) {
        s.wade_mean /= static_cast<double>(s.runs);
        s.final_accuracy_mean /= static_cast<double>(s.runs);
    }
    return s;
}

harness::ExperimentPlan desk_plan(int task, std::vector<std::string> models)
{
    harness::ExperimentPlan p;
    p.tasks = {task};
    p.models = std::move(models);
    p.runs = 10;
    return p;
}

struct Task1Results {
    Summary esn, rnn;
    double esn_seconds = 0.0;
};

const Task1Results& task1_results()
{
    static const Task1Results results = [] {
        Task1Results r;
        auto start = Clock::now();
        const auto esn = harness::run_experiment(desk_plan(1, {"esn"}));
        r.esn_seconds = seconds_since(start);
        r.esn = summarize(esn, "esn");
        r.rnn = summarize(harness::run_experiment(desk_plan(1, {"rnn"})), "rnn");
        return r;
    }();
    return results;
}

Outcome task1_esn_accuracy()
{
    const auto& r = task1_results();
    const bool ok = r.esn.runs == 10 && r.esn.failed == 0 && r.esn.final_accuracy_mean >= 0.95 && r.esn_seconds < 600;
    return {ok, fmt::format("mean final test accuracy {:.4f} over {} runs (threshold 0.95), {:.1f}s (limit 600s)",
                            r.esn.final_accuracy_mean, r.esn.runs, r.esn_seconds)};
}

Outcome task1_wade_ratio()
{
    const auto& r = task1_results();
    const double ratio = r.rnn.wade_mean > 0 ? r.esn.wade_mean / r.rnn.wade_mean : INFINITY;
    const bool ok = r.esn.runs == 10 && r.rnn.runs == 10 && r.esn.wade_mean >= 1.5 * r.rnn.wade_mean;
    return {ok, fmt::format("mean WADE esn {:.4f}, rnn {:.4f}, ratio {:.3f} (threshold 1.5)", r.esn.wade_mean,
                            r.rnn.wade_mean, ratio)};
}

Outcome task5_best_ca()
{
    const auto start = Clock::now();
    const auto rnn = summarize(harness::run_experiment(desk_plan(5, {"rnn"})), "rnn");
    std::vector<int> rules(256);
    for (int i = 0; i < 256; ++i) rules[static_cast<std::size_t>(i)] = i;
    const auto sweep = harness::sweep_rules(desk_plan(5, {}), rules);
    const auto& best = sweep.at(0);
    const bool ok = rnn.runs == 10 && best.best_mean_wade > rnn.wade_mean;
    return {ok, fmt::format("best rule {} mean WADE {:.4f} vs rnn {:.4f} (256 rules x 10 runs, {:.0f}s)",
                            best.best_rule, best.best_mean_wade, rnn.wade_mean, seconds_since(start))};
}

// ---------------------------------------------------------------- corpus ---

Outcome generator_integrity()
{
    std::size_t checked = 0, disagree = 0;
    for (int task : {3, 4}) {
        const auto ds = corpus::generate(corpus::TaskSpec::defaults(task), 777, 5000);
        for (const auto& s : ds.samples) {
            const auto t = ds.vocabulary.decode(s.tokens);
            std::size_t i = static_cast<std::size_t>(std::find(t.begin(), t.end(), "x") - t.begin()) + 1;
            while (i < t.size()) {
                std::vector<std::string> query;
                if (task == 3) {
                    if (t[i] == "x") ++i;
                    query.push_back(t[i++]);
                } else {
                    while (t[i] != "y") query.push_back(t[i++]);
                    ++i;
                }
                const int stated = std::stoi(t[i++]);
                disagree += corpus::count_oracle(t, query) != stated;
            }
            ++checked;
        }
    }

    const auto qa = corpus::generate(corpus::TaskSpec::defaults(5), 778, 1000);
    int yes = 0;
    for (const auto& s : qa.samples) yes += qa.vocabulary.token(s.tokens.back()) == "YES";
    const double yes_fraction = yes / 1000.0;

    int regen_mismatch = 0;
    for (int task = 1; task <= corpus::num_tasks; ++task) {
        std::ostringstream a, b;
        corpus::write_dataset(a, corpus::split(corpus::generate(corpus::TaskSpec::defaults(task), 779, 200), 0.8, 779));
        corpus::write_dataset(b, corpus::split(corpus::generate(corpus::TaskSpec::defaults(task), 779, 200), 0.8, 779));
        regen_mismatch += a.str() != b.str();
    }
    const bool ok = checked == 10000 && disagree == 0 && yes_fraction >= 0.45 && yes_fraction <= 0.55 &&
                    regen_mismatch == 0;
    return {ok, fmt::format("{} counting samples, {} oracle disagreements; task-5 YES fraction {:.3f}; "
                            "{} of 10 tasks not byte-identical on regeneration",
                            checked, disagree, yes_fraction, regen_mismatch)};
}

// --------------------------------------------------------------- harness ---

Outcome harness_determinism()
{
    harness::ExperimentPlan plan;
    plan.tasks = {1, 3};
    plan.models = {"esn", "reca:110", "rnn", "lstm"};
    plan.sequences = 60;
    plan.runs = 2;
    plan.epochs = 2;
    plan.extra.set("esn.K", "200");
    plan.extra.set("baseline.target", "2000");
    const auto a = harness::run_experiment(plan);
    const auto b = harness::run_experiment(plan);
    std::size_t differ = a.size() == b.size() ? 0 : a.size();
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) differ += !a[i].same_result(b[i]);

    const auto dir = fs::temp_directory_path() / "wadebench_acceptance_export";
    fs::remove_all(dir);
    harness::export_records(a, dir);
    std::size_t rescore_mismatch = 0;
    for (const auto& r : a) {
        const double w = metric::wade_from_file(dir / "curves" / harness::curve_file_name(r),
                                                metric::CheckpointSet(r.checkpoints));
        rescore_mismatch += w != r.wade;
    }
    const auto reread = harness::read_records(dir / "records.jsonl");
    std::size_t reread_mismatch = reread.size() == a.size() ? 0 : a.size();
    for (std::size_t i = 0; i < std::min(a.size(), reread.size()); ++i) reread_mismatch += !(reread[i] == a[i]);
    fs::remove_all(dir);
    const bool ok = !a.empty() && differ == 0 && rescore_mismatch == 0 && reread_mismatch == 0;
    return {ok, fmt::format("{} records: {} differ on rerun, {} curve CSVs re-score differently, {} differ after "
                            "export/import",
                            a.size(), differ, rescore_mismatch, reread_mismatch)};
}

}  // namespace

int main()
{
    report("metric-correctness", metric_correctness);
    report("reservoir-ca-fidelity", ca_fidelity);
    report("baseline-gradient-fidelity", gradient_fidelity);
    report("parameter-parity", parameter_parity);
    report("generator-integrity", generator_integrity);
    report("harness-determinism", harness_determinism);
    report("task1-esn-accuracy", task1_esn_accuracy);
    report("task1-wade-esn-vs-rnn", task1_wade_ratio);
    report("task5-best-ca-vs-rnn", task5_best_ca);
    std::cout << (failures == 0 ? "all criteria passed" : fmt::format("{} criteria failed", failures)) << std::endl;
    return failures == 0 ? 0 : 1;
}
