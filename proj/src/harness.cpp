#include "wadebench/harness.hpp"

#include "wadebench/baseline.hpp"
#include "wadebench/errors.hpp"
#include "wadebench/readout.hpp"
#include "wadebench/reservoir.hpp"
#include "wadebench/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace wadebench::harness {

namespace {

bool is_reca(const std::string& model)
{
    return model.rfind("reca:", 0) == 0;
}

int reca_rule(const std::string& model)
{
    const auto rule = parse_int(std::string_view(model).substr(5), "rule");
    if (rule < 0 || rule > 255) throw config_error("rule must lie in 0..255 in model '" + model + "'");
    return static_cast<int>(rule);
}

std::string join_ints(const std::vector<int>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + std::to_string(xs[i]);
    return s;
}

std::string join_strings(const std::vector<std::string>& xs)
{
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + xs[i];
    return s;
}

std::string checkpoints_text(const metric::CheckpointSet& c)
{
    std::string s;
    for (std::size_t i = 0; i < c.thresholds().size(); ++i) s += (i ? "," : "") + format_double(c.thresholds()[i]);
    return s;
}

readout::ReadoutConfig readout_config(const KeyValueConfig& extra)
{
    readout::ReadoutConfig c;
    c.learning_rate = extra.get_double("readout.lr", c.learning_rate);
    c.weight_decay = extra.get_double("readout.weight_decay", c.weight_decay);
    return c;
}

baseline::AdamConfig adam_config(const KeyValueConfig& extra)
{
    baseline::AdamConfig c;
    c.learning_rate = extra.get_double("adam.lr", c.learning_rate);
    c.beta1 = extra.get_double("adam.beta1", c.beta1);
    c.beta2 = extra.get_double("adam.beta2", c.beta2);
    c.epsilon = extra.get_double("adam.epsilon", c.epsilon);
    return c;
}

std::unique_ptr<reservoir::Reservoir> make_reservoir(const std::string& model, std::size_t L, std::uint64_t seed,
                                                     const KeyValueConfig& extra)
{
    if (model == "esn") {
        auto c = reservoir::EsnConfig::from_config(extra);
        c.seed = seed;
        return std::make_unique<reservoir::EchoStateNetwork>(c, L);
    }
    auto c = reservoir::CaConfig::from_config(extra);
    c.rule = reca_rule(model);
    c.seed = seed;
    return std::make_unique<reservoir::ReservoirCA>(c, L);
}

// Plan-level settings that shape every run, for provenance.
KeyValueConfig plan_provenance(const ExperimentPlan& plan, int task)
{
    KeyValueConfig c;
    c.set("plan.sequences", std::to_string(plan.sequences));
    c.set("plan.train_ratio", format_double(plan.train_ratio));
    c.set("plan.cadence", plan.cadence.to_string());
    c.set("plan.checkpoints", checkpoints_text(plan.checkpoints));
    const auto spec = plan.task_spec(task).to_config();
    for (const auto& [k, v] : spec.values()) c.set("task." + k, v);
    c.set("task.id", std::to_string(task));
    return c;
}

void finish_record(RunRecord& r, const ExperimentPlan& plan, KeyValueConfig config)
{
    config.merge(plan_provenance(plan, r.task));
    r.config = config.to_string();
    r.fingerprint = fmt::format("{:016x}", fnv1a(r.config));
    r.checkpoints = plan.checkpoints.thresholds();
    r.wade = metric::wade(r.curve, plan.checkpoints);
    r.max_accuracy = r.curve.max_accuracy();
}

using SamplePtrs = std::vector<const corpus::TaskSample*>;

void run_reservoir(RunRecord& r, const ExperimentPlan& plan, std::size_t L, const SamplePtrs& train,
                   const SamplePtrs& test)
{
    auto res = make_reservoir(r.model, L, r.weight_seed, plan.extra);
    readout::LinearReadout decoder(res->feature_size(), L, readout_config(plan.extra));

    std::size_t total = 0;
    for (const auto* s : test) total += s->masked_count();
    if (total == 0) throw undefined_accuracy_error("test split has no masked positions");
    Eigen::MatrixXd test_features(static_cast<Eigen::Index>(res->feature_size()), static_cast<Eigen::Index>(total));
    std::vector<corpus::TokenId> test_targets;
    test_targets.reserve(total);
    Eigen::Index col = 0;
    for (const auto* s : test) {
        const Eigen::MatrixXd f = res->masked_features(s->tokens, s->mask);
        test_features.middleCols(col, f.cols()) = f;
        col += f.cols();
        for (std::size_t t = 0; t < s->size(); ++t)
            if (s->mask[t]) test_targets.push_back(s->tokens[t]);
    }
    auto test_accuracy = [&] {
        return static_cast<double>(readout::count_correct(decoder, test_features, test_targets)) /
               static_cast<double>(total);
    };

    r.initial_accuracy = test_accuracy();
    const auto final_step = static_cast<std::int64_t>(train.size());
    std::int64_t step = 0;
    std::vector<corpus::TokenId> targets;
    for (const auto* s : train) {
        const Eigen::MatrixXd f = res->masked_features(s->tokens, s->mask);
        targets.clear();
        for (std::size_t t = 0; t < s->size(); ++t)
            if (s->mask[t]) targets.push_back(s->tokens[t]);
        const double loss = decoder.train(f, targets);
        if (!std::isfinite(loss)) {
            r.status = "failed";
            r.error = "non-finite loss at training step " + std::to_string(step + 1);
            break;
        }
        ++step;
        if (plan.cadence.due(step, final_step)) r.curve.push_back({step, test_accuracy()});
    }
    r.train_sequences = step;

    KeyValueConfig config = res->config();
    const auto rc = decoder.settings();
    config.set("model", r.model);
    config.set("readout.lr", format_double(rc.learning_rate));
    config.set("readout.weight_decay", format_double(rc.weight_decay));
    finish_record(r, plan, std::move(config));
}

void run_baseline(RunRecord& r, const ExperimentPlan& plan, std::size_t L, const SamplePtrs& train,
                  const SamplePtrs& test)
{
    auto model = baseline::make_model(r.model, L, r.weight_seed, plan.extra.get_int("baseline.target", -1));
    baseline::TrainConfig tc;
    tc.epochs = plan.epochs;
    tc.adam = adam_config(plan.extra);
    tc.shuffle_seed = derive_seed(r.weight_seed, {fnv1a("shuffle")});
    auto outcome = baseline::train_baseline(*model, train, test, tc, plan.cadence);

    r.curve = std::move(outcome.curve);
    r.initial_accuracy = outcome.initial_accuracy;
    r.train_sequences = outcome.train_sequences;
    if (outcome.failed) {
        r.status = "failed";
        r.error = outcome.error;
    }

    KeyValueConfig config;
    config.set("model", r.model);
    config.set("baseline.hidden", std::to_string(model->hidden_size()));
    config.set("baseline.parameters", std::to_string(model->parameter_count()));
    config.set("baseline.epochs", std::to_string(plan.epochs));
    config.set("adam.lr", format_double(tc.adam.learning_rate));
    config.set("adam.beta1", format_double(tc.adam.beta1));
    config.set("adam.beta2", format_double(tc.adam.beta2));
    config.set("adam.epsilon", format_double(tc.adam.epsilon));
    finish_record(r, plan, std::move(config));
}

// All models for one (task, run) pair, sharing a dataset.
std::vector<RunRecord> run_unit(const ExperimentPlan& plan, int task, int run)
{
    std::vector<RunRecord> out;
    const std::uint64_t dseed = data_seed(plan, task, run);
    corpus::Dataset ds;
    std::exception_ptr data_error;
    try {
        ds = corpus::split(corpus::generate(plan.task_spec(task), dseed, plan.sequences), plan.train_ratio, dseed);
    } catch (const std::exception&) {
        data_error = std::current_exception();
    }
    SamplePtrs train, test;
    for (auto i : ds.train_indices) train.push_back(&ds.samples[i]);
    for (auto i : ds.test_indices) test.push_back(&ds.samples[i]);

    for (const auto& model : plan.models) {
        RunRecord r;
        r.task = task;
        r.model = model;
        r.run = run;
        r.data_seed = dseed;
        r.weight_seed = weight_seed(plan, task, model, run);
        const auto start = std::chrono::steady_clock::now();
        try {
            if (data_error) std::rethrow_exception(data_error);
            if (model == "rnn" || model == "lstm")
                run_baseline(r, plan, ds.vocabulary.size(), train, test);
            else
                run_reservoir(r, plan, ds.vocabulary.size(), train, test);
        } catch (const std::exception& e) {
            r.status = "failed";
            r.error = e.what();
            r.checkpoints = plan.checkpoints.thresholds();
            r.wade = metric::wade(r.curve, plan.checkpoints);
            r.max_accuracy = r.curve.max_accuracy();
        }
        r.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
    }
    return out;
}

double mean_of(const std::vector<double>& xs)
{
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double population_std(const std::vector<double>& xs, double mean)
{
    double s = 0.0;
    for (double x : xs) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

void validate_model_name(const std::string& model)
{
    if (model == "esn" || model == "rnn" || model == "lstm") return;
    if (is_reca(model)) {
        reca_rule(model);
        return;
    }
    throw config_error("unknown model '" + model + "' (expected esn, reca:<rule>, rnn or lstm)");
}

corpus::TaskSpec ExperimentPlan::task_spec(int task) const
{
    const std::string prefix = "task" + std::to_string(task) + ".";
    KeyValueConfig params;
    for (const auto& [k, v] : extra.values())
        if (k.rfind(prefix, 0) == 0) params.set(k.substr(prefix.size()), v);
    return corpus::TaskSpec::from_config(task, params);
}

void ExperimentPlan::validate() const
{
    if (tasks.empty()) throw config_error("plan needs at least one task");
    if (models.empty()) throw config_error("plan needs at least one model");
    for (int t : tasks) task_spec(t).validate();
    for (const auto& m : models) validate_model_name(m);
    if (sequences < 2) throw config_error("plan needs at least 2 sequences");
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw config_error("train_ratio must lie in (0, 1)");
    if (runs < 1) throw config_error("runs must be >= 1");
    if (epochs < 0) throw config_error("epochs must be >= 0");
    if (threads < 1) throw config_error("threads must be >= 1");
    // Surface bad pass-through settings before any run starts.
    reservoir::EsnConfig::from_config(extra);
    reservoir::CaConfig::from_config(extra);
    readout::LinearReadout(1, 1, readout_config(extra));
    baseline::Adam({}, adam_config(extra));
}

ExperimentPlan ExperimentPlan::from_config(const KeyValueConfig& config)
{
    ExperimentPlan p;
    static const std::vector<std::string> known{"tasks", "models",  "sequences", "train_ratio", "runs", "epochs",
                                                "cadence", "checkpoints", "seed", "threads", "out"};
    for (const auto& [k, v] : config.values()) {
        if (std::find(known.begin(), known.end(), k) != known.end()) continue;
        const bool passthrough = k.rfind("esn.", 0) == 0 || k.rfind("ca.", 0) == 0 || k.rfind("readout.", 0) == 0 ||
                                 k.rfind("adam.", 0) == 0 || k.rfind("baseline.", 0) == 0 || k.rfind("task", 0) == 0;
        if (!passthrough) throw config_error("unknown plan key '" + k + "'");
        p.extra.set(k, v);
    }
    if (auto v = config.get("tasks")) {
        p.tasks.clear();
        for (const auto& t : split_list(*v)) p.tasks.push_back(static_cast<int>(parse_int(t, "task")));
    }
    if (auto v = config.get("models")) p.models = split_list(*v);
    const auto sequences = config.get_int("sequences", static_cast<std::int64_t>(p.sequences));
    if (sequences < 0) throw config_error("sequences must be positive");
    p.sequences = static_cast<std::size_t>(sequences);
    p.train_ratio = config.get_double("train_ratio", p.train_ratio);
    p.runs = static_cast<int>(config.get_int("runs", p.runs));
    p.epochs = static_cast<int>(config.get_int("epochs", p.epochs));
    if (auto v = config.get("cadence")) p.cadence = metric::Cadence::parse(*v);
    if (auto v = config.get("checkpoints")) {
        const auto parts = split_list(*v);
        if (parts.size() == 1 && parts[0].find('.') == std::string::npos)
            p.checkpoints = metric::CheckpointSet::evenly_spaced(static_cast<int>(parse_int(parts[0], "checkpoints")));
        else {
            std::vector<double> ts;
            for (const auto& s : parts) ts.push_back(parse_double(s, "checkpoint"));
            p.checkpoints = metric::CheckpointSet(std::move(ts));
        }
    }
    p.seed = config.get_uint("seed", p.seed);
    p.threads = static_cast<int>(config.get_int("threads", p.threads));
    p.out = config.get_string("out", p.out);
    p.validate();
    return p;
}

KeyValueConfig ExperimentPlan::to_config() const
{
    KeyValueConfig c = extra;
    c.set("tasks", join_ints(tasks));
    c.set("models", join_strings(models));
    c.set("sequences", std::to_string(sequences));
    c.set("train_ratio", format_double(train_ratio));
    c.set("runs", std::to_string(runs));
    c.set("epochs", std::to_string(epochs));
    c.set("cadence", cadence.to_string());
    c.set("checkpoints", checkpoints_text(checkpoints));
    c.set("seed", std::to_string(seed));
    c.set("threads", std::to_string(threads));
    if (!out.empty()) c.set("out", out);
    return c;
}

std::uint64_t data_seed(const ExperimentPlan& plan, int task, int run)
{
    return derive_seed(plan.seed, {fnv1a("data"), static_cast<std::uint64_t>(task), static_cast<std::uint64_t>(run)});
}

std::uint64_t weight_seed(const ExperimentPlan& plan, int task, const std::string& model, int run)
{
    return derive_seed(plan.seed, {fnv1a("weights"), static_cast<std::uint64_t>(task), fnv1a(model),
                                   static_cast<std::uint64_t>(run)});
}

// ------------------------------------------------------------- records ---

nlohmann::json RunRecord::to_json() const
{
    nlohmann::json curve_json = nlohmann::json::array();
    for (const auto& p : curve.points()) curve_json.push_back({p.step, p.accuracy});
    return nlohmann::json{{"task", task},
                          {"model", model},
                          {"run", run},
                          {"data_seed", data_seed},
                          {"weight_seed", weight_seed},
                          {"config", config},
                          {"fingerprint", fingerprint},
                          {"step_unit", step_unit},
                          {"curve", curve_json},
                          {"checkpoints", checkpoints},
                          {"wade", wade},
                          {"max_accuracy", max_accuracy},
                          {"initial_accuracy", initial_accuracy},
                          {"train_sequences", train_sequences},
                          {"status", status},
                          {"error", error},
                          {"wall_clock_s", wall_clock_s}};
}

RunRecord RunRecord::from_json(const nlohmann::json& j)
{
    try {
        RunRecord r;
        r.task = j.at("task").get<int>();
        r.model = j.at("model").get<std::string>();
        r.run = j.at("run").get<int>();
        r.data_seed = j.at("data_seed").get<std::uint64_t>();
        r.weight_seed = j.at("weight_seed").get<std::uint64_t>();
        r.config = j.at("config").get<std::string>();
        r.fingerprint = j.at("fingerprint").get<std::string>();
        r.step_unit = j.at("step_unit").get<std::string>();
        for (const auto& p : j.at("curve"))
            r.curve.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>()});
        r.checkpoints = j.at("checkpoints").get<std::vector<double>>();
        r.wade = j.at("wade").get<double>();
        r.max_accuracy = j.at("max_accuracy").get<double>();
        r.initial_accuracy = j.at("initial_accuracy").get<double>();
        r.train_sequences = j.at("train_sequences").get<std::int64_t>();
        r.status = j.at("status").get<std::string>();
        r.error = j.at("error").get<std::string>();
        r.wall_clock_s = j.at("wall_clock_s").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("invalid run record: ") + e.what());
    }
}

bool RunRecord::same_result(const RunRecord& other) const
{
    RunRecord a = *this, b = other;
    a.wall_clock_s = b.wall_clock_s = 0.0;
    return a == b;
}

// ----------------------------------------------------------- execution ---

std::vector<RunRecord> run_experiment(const ExperimentPlan& plan, const Progress& progress)
{
    plan.validate();
    struct Unit {
        int task, run;
    };
    std::vector<Unit> units;
    for (int task : plan.tasks)
        for (int run = 0; run < plan.runs; ++run) units.push_back({task, run});

    std::vector<std::vector<RunRecord>> slots(units.size());
    std::mutex progress_mutex;
    auto work = [&](std::size_t u) {
        slots[u] = run_unit(plan, units[u].task, units[u].run);
        if (progress) {
            std::lock_guard lock(progress_mutex);
            for (const auto& r : slots[u]) progress(r);
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(plan.threads), units.size());
    if (workers <= 1) {
        for (std::size_t u = 0; u < units.size(); ++u) work(u);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t u; (u = next.fetch_add(1)) < units.size();) work(u);
            });
        for (auto& t : pool) t.join();
    }
    std::vector<RunRecord> out;
    for (auto& s : slots)
        for (auto& r : s) out.push_back(std::move(r));
    return out;
}

std::vector<int> parse_rule_set(std::string_view text)
{
    std::vector<int> rules;
    for (const auto& part : split_list(text)) {
        const auto dash = part.find('-', 1);
        if (dash == std::string::npos) {
            rules.push_back(static_cast<int>(parse_int(part, "rule")));
            continue;
        }
        const auto lo = parse_int(std::string_view(part).substr(0, dash), "rule");
        const auto hi = parse_int(std::string_view(part).substr(dash + 1), "rule");
        if (hi < lo) throw config_error("empty rule range '" + part + "'");
        for (auto r = lo; r <= hi; ++r) rules.push_back(static_cast<int>(r));
    }
    for (int r : rules)
        if (r < 0 || r > 255) throw config_error("rule must lie in 0..255, got " + std::to_string(r));
    return rules;
}

std::vector<SweepResult> sweep_rules(const ExperimentPlan& plan, std::span<const int> rules,
                                     std::vector<RunRecord>* records, const Progress& progress)
{
    if (rules.empty()) throw config_error("rule set must be nonempty");
    std::vector<int> sorted(rules.begin(), rules.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    for (int r : sorted)
        if (r < 0 || r > 255) throw config_error("rule must lie in 0..255, got " + std::to_string(r));

    ExperimentPlan p = plan;
    p.models.clear();
    for (int r : sorted) p.models.push_back("reca:" + std::to_string(r));
    auto recs = run_experiment(p, progress);

    std::vector<SweepResult> out;
    for (int task : plan.tasks) {
        SweepResult s;
        s.task = task;
        for (int rule : sorted) {
            const std::string name = "reca:" + std::to_string(rule);
            std::vector<double> w;
            for (const auto& r : recs)
                if (r.task == task && r.model == name) w.push_back(r.wade);
            s.scores.push_back({rule, mean_of(w)});
        }
        // Ascending rule order plus strict comparison keeps the lower rule on ties.
        const RuleScore* best = &s.scores.front();
        for (const auto& sc : s.scores)
            if (sc.mean_wade > best->mean_wade) best = &sc;
        s.best_rule = best->rule;
        s.best_mean_wade = best->mean_wade;
        out.push_back(std::move(s));
    }
    if (records) *records = std::move(recs);
    return out;
}

// ---------------------------------------------------------- aggregation ---

std::vector<AggregateRow> aggregate(std::span<const RunRecord> records)
{
    std::vector<std::pair<int, std::string>> keys;
    std::map<std::pair<int, std::string>, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        auto key = std::make_pair(r.task, r.model);
        auto& g = groups[key];
        if (g.empty()) keys.push_back(key);
        g.push_back(&r);
    }
    std::vector<AggregateRow> rows;
    for (const auto& key : keys) {
        const auto& g = groups[key];
        std::vector<double> w, a;
        AggregateRow row;
        row.task = key.first;
        row.model = key.second;
        row.runs = g.size();
        for (const auto* r : g) {
            w.push_back(r->wade);
            a.push_back(r->max_accuracy);
            if (r->status != "ok") ++row.failures;
        }
        row.wade_mean = mean_of(w);
        row.wade_std = population_std(w, row.wade_mean);
        row.accuracy_mean = mean_of(a);
        row.accuracy_std = population_std(a, row.accuracy_mean);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_aggregate_csv(std::ostream& out, std::span<const AggregateRow> rows)
{
    out << "task,model,runs,failures,wade_mean,wade_std,max_accuracy_mean,max_accuracy_std\n";
    for (const auto& r : rows)
        out << r.task << ',' << r.model << ',' << r.runs << ',' << r.failures << ',' << format_double(r.wade_mean)
            << ',' << format_double(r.wade_std) << ',' << format_double(r.accuracy_mean) << ','
            << format_double(r.accuracy_std) << '\n';
}

std::string format_table(std::span<const AggregateRow> rows)
{
    std::vector<int> tasks;
    std::vector<std::string> models;
    std::map<std::pair<int, std::string>, const AggregateRow*> cells;
    for (const auto& r : rows) {
        if (std::find(tasks.begin(), tasks.end(), r.task) == tasks.end()) tasks.push_back(r.task);
        if (std::find(models.begin(), models.end(), r.model) == models.end()) models.push_back(r.model);
        cells[{r.task, r.model}] = &r;
    }
    std::sort(tasks.begin(), tasks.end());

    auto block = [&](const std::string& title, bool wade) {
        std::vector<std::vector<std::string>> grid;
        grid.push_back({title});
        for (const auto& m : models) grid.back().push_back(m);
        for (int t : tasks) {
            grid.push_back({"task " + std::to_string(t)});
            for (const auto& m : models) {
                auto it = cells.find({t, m});
                if (it == cells.end()) {
                    grid.back().push_back("-");
                    continue;
                }
                const auto* r = it->second;
                grid.back().push_back(wade ? fmt::format("{:.2f}±{:.2f}", r->wade_mean, r->wade_std)
                                           : fmt::format("{:.2f}±{:.2f}", r->accuracy_mean, r->accuracy_std));
            }
        }
        // Width in code points: "±" is two bytes in UTF-8.
        auto width = [](const std::string& s) {
            std::size_t n = 0;
            for (unsigned char c : s) n += (c & 0xC0) != 0x80;
            return n;
        };
        std::vector<std::size_t> widths(models.size() + 1, 0);
        for (const auto& row : grid)
            for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
        std::string text;
        for (const auto& row : grid) {
            std::string line;
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) line += "  ";
                line += row[c] + std::string(widths[c] - width(row[c]), ' ');
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            text += line + '\n';
        }
        return text;
    };
    return block("WADE", true) + '\n' + block("max accuracy", false);
}

// ---------------------------------------------------------- persistence ---

void write_records(std::ostream& out, std::span<const RunRecord> records)
{
    for (const auto& r : records) out << r.to_json().dump() << '\n';
}

std::vector<RunRecord> read_records(std::istream& in)
{
    std::vector<RunRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            out.push_back(RunRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw format_error("records line " + std::to_string(line_no) + ": " + e.what());
        } catch (const error& e) {
            throw format_error("records line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<RunRecord> read_records(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open records file " + path.string());
    return read_records(in);
}

std::string curve_file_name(const RunRecord& record)
{
    std::string model = record.model;
    std::replace(model.begin(), model.end(), ':', '-');
    return "task" + std::to_string(record.task) + "_" + model + "_run" + std::to_string(record.run) + ".csv";
}

void export_records(std::span<const RunRecord> records, const std::filesystem::path& dir)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir / "curves", ec);
    if (ec) throw io_error("cannot create " + (dir / "curves").string() + ": " + ec.message());
    auto open = [](const fs::path& p) {
        std::ofstream f(p);
        if (!f) throw io_error("cannot write " + p.string());
        return f;
    };
    {
        auto f = open(dir / "records.jsonl");
        write_records(f, records);
        if (!f) throw io_error("failed writing " + (dir / "records.jsonl").string());
    }
    for (const auto& r : records) {
        auto f = open(dir / "curves" / curve_file_name(r));
        metric::write_curve_csv(f, r.curve);
        if (!f) throw io_error("failed writing curve for " + curve_file_name(r));
    }
    {
        const auto rows = aggregate(records);
        auto f = open(dir / "aggregate.csv");
        write_aggregate_csv(f, rows);
        auto t = open(dir / "aggregate.txt");
        t << format_table(rows);
    }
}

}  // namespace wadebench::harness
