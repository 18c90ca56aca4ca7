#include "wadebench/corpus.hpp"

#include "wadebench/errors.hpp"
#include "wadebench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace wadebench::corpus {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens))
{
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
        const auto& t = tokens_[i];
        if (t.empty() || t.find_first_of(" \t\r\n") != std::string::npos)
            throw vocabulary_error("invalid token '" + t + "'");
        if (!ids_.emplace(t, static_cast<TokenId>(i)).second)
            throw vocabulary_error("duplicate token '" + t + "'");
    }
}

const std::string& Vocabulary::token(TokenId id) const
{
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
        throw index_error("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(tokens_.size()));
    return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::id(std::string_view token) const
{
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) throw vocabulary_error("unknown token '" + std::string(token) + "'");
    return it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const
{
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const
{
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (TokenId i : ids) out.push_back(token(i));
    return out;
}

std::size_t TaskSample::masked_count() const
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

// ------------------------------------------------------------------ masks ---

namespace {

bool reproduces_periodic(std::span<const std::string> tokens, std::size_t p)
{
    for (std::size_t i = p; i < tokens.size(); ++i)
        if (tokens[i] != tokens[i - p]) return false;
    return true;
}

bool reproduces_increasing(std::span<const std::string> tokens, std::size_t p)
{
    std::size_t pos = 0;
    for (std::size_t repeat = 1; pos < tokens.size(); ++repeat) {
        for (std::size_t s = 0; s < p; ++s)
            for (std::size_t r = 0; r < repeat && pos < tokens.size(); ++r, ++pos)
                if (tokens[pos] != tokens[s]) return false;
    }
    return true;
}

}  // namespace

std::size_t inferred_period(int task_id, std::span<const std::string> tokens)
{
    if (task_id != 1 && task_id != 2) throw config_error("periods exist only for tasks 1 and 2");
    for (std::size_t p = 1; p < tokens.size(); ++p) {
        const bool ok = task_id == 1 ? reproduces_periodic(tokens, p) : reproduces_increasing(tokens, p);
        if (ok) return p;
    }
    return tokens.size();
}

std::vector<std::uint8_t> derive_mask(int task_id, std::span<const std::string> tokens)
{
    std::vector<std::uint8_t> mask(tokens.size(), 0);
    switch (task_id) {
    case 1:
    case 2: {
        const std::size_t p = inferred_period(task_id, tokens);
        for (std::size_t i = p; i < tokens.size(); ++i) mask[i] = 1;
        break;
    }
    case 3:
        for (std::size_t i = 2; i < tokens.size(); ++i)
            if (tokens[i - 2] == "x") mask[i] = 1;
        break;
    case 4: {
        bool in_query = false;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (in_query && i > 0 && tokens[i - 1] == "y") mask[i] = 1;
            if (tokens[i] == "x") in_query = true;
        }
        break;
    }
    default:
        if (task_id < 1 || task_id > num_tasks) throw config_error("unknown task id " + std::to_string(task_id));
        for (std::size_t i = 1; i < tokens.size(); ++i)
            if (tokens[i - 1] == "?") mask[i] = 1;
        break;
    }
    return mask;
}

// ------------------------------------------------------------- generation ---

Dataset generate(const TaskSpec& spec, std::uint64_t seed, std::size_t count)
{
    spec.validate();
    if (count == 0) throw config_error("sample count must be positive");

    Dataset ds;
    ds.spec = spec;
    ds.seed = seed;
    ds.vocabulary = task_vocabulary(spec);
    ds.samples.reserve(count);

    Rng rng(derive_seed(seed, {fnv1a("corpus"), static_cast<std::uint64_t>(spec.task_id)}));
    for (std::size_t i = 0; i < count; ++i) {
        const auto tokens = generate_tokens(spec, rng);
        TaskSample sample;
        sample.tokens = ds.vocabulary.encode(tokens);
        sample.mask = derive_mask(spec.task_id, tokens);
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

Eigen::VectorXd encode_one_hot(TokenId id, std::size_t vocabulary_size)
{
    if (id < 0 || static_cast<std::size_t>(id) >= vocabulary_size)
        throw index_error("token id " + std::to_string(id) + " outside vocabulary of size " +
                          std::to_string(vocabulary_size));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_size));
    x[id] = 1.0;
    return x;
}

Dataset split(Dataset dataset, double ratio, std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio < 1.0)) throw config_error("split ratio must be in (0, 1)");
    const std::size_t n = dataset.samples.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, {fnv1a("split")}));
    rng.shuffle(order);

    const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    dataset.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    dataset.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    return dataset;
}

// ---------------------------------------------------------------- oracles ---

int count_oracle(std::span<const std::string> tokens, std::span<const std::string> query)
{
    const auto x = std::find(tokens.begin(), tokens.end(), "x");
    if (x == tokens.end()) throw format_error("sequence has no query symbol 'x'");
    const std::span<const std::string> prompt(tokens.begin(), x);
    if (prompt.empty()) return 0;

    const bool has_separator = std::find(prompt.begin(), prompt.end(), "y") != prompt.end();
    if (query.size() == 1 && !has_separator)
        return static_cast<int>(std::count(prompt.begin(), prompt.end(), query[0]));

    int count = 0;
    std::vector<std::string> current;
    auto close = [&] {
        if (std::equal(current.begin(), current.end(), query.begin(), query.end())) ++count;
        current.clear();
    };
    for (const auto& tok : prompt) {
        if (tok == "y")
            close();
        else
            current.push_back(tok);
    }
    close();
    return count;
}

int world_count_oracle(std::span<const std::string> tokens, std::string_view verb, std::size_t end)
{
    end = std::min(end, tokens.size());
    // Statements are exactly the "."-terminated segments; questions follow the last ".".
    std::size_t stop = 0;
    for (std::size_t i = 0; i < end; ++i)
        if (tokens[i] == ".") stop = i + 1;

    std::set<std::string> things;
    std::size_t i = 0;
    while (i < stop) {
        if (tokens[i] != "I") {
            ++i;
            continue;
        }
        // Clause: I [DO NOT] VERB item (AND item)* terminated by "." or (AND|BUT) I.
        ++i;
        bool negated = false;
        if (i + 1 < stop && tokens[i] == "DO" && tokens[i + 1] == "NOT") {
            negated = true;
            i += 2;
        }
        if (i >= stop) break;
        const std::string& clause_verb = tokens[i++];
        std::string item;
        auto flush = [&] {
            if (!item.empty() && !negated && clause_verb == verb) things.insert(item);
            item.clear();
        };
        while (i < stop && tokens[i] != ".") {
            const bool link = tokens[i] == "AND" || tokens[i] == "BUT";
            if (link && i + 1 < stop && tokens[i + 1] == "I") break;
            if (link) {
                flush();
            } else {
                item += tokens[i];
                item += ' ';
            }
            ++i;
        }
        flush();
    }
    return static_cast<int>(things.size());
}

// ---------------------------------------------------------- serialization ---

void write_dataset(std::ostream& out, const Dataset& ds)
{
    out << "#wadebench-dataset 1\n";
    out << "task=" << ds.spec.task_id << '\n';
    out << "seed=" << ds.seed << '\n';
    out << "count=" << ds.samples.size() << '\n';
    const auto params = ds.spec.to_config();
    for (const auto& [k, v] : params.values()) out << "param." << k << '=' << v << '\n';
    out << "vocab=";
    for (std::size_t i = 0; i < ds.vocabulary.size(); ++i) out << (i ? " " : "") << ds.vocabulary.tokens()[i];
    out << '\n';
    auto write_indices = [&out](const char* key, const std::vector<std::size_t>& idx) {
        if (idx.empty()) return;
        out << key << '=';
        for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << idx[i];
        out << '\n';
    };
    write_indices("train", ds.train_indices);
    write_indices("test", ds.test_indices);
    out << "---\n";
    for (const auto& s : ds.samples) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
            out << (i ? " " : "") << ds.vocabulary.token(s.tokens[i]);
        out << '\n';
        for (std::size_t i = 0; i < s.mask.size(); ++i) out << (i ? " " : "") << int{s.mask[i]};
        out << '\n';
    }
}

Dataset read_dataset(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        if (!std::getline(in, line)) return false;
        ++line_no;
        return true;
    };
    auto fail = [&](const std::string& msg) -> format_error {
        return format_error("dataset line " + std::to_string(line_no) + ": " + msg);
    };

    if (!next_line() || line != "#wadebench-dataset 1") throw fail("missing dataset header");

    KeyValueConfig header;
    KeyValueConfig params;
    while (true) {
        if (!next_line()) throw fail("unexpected end of header");
        if (line == "---") break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw fail("expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        if (key.rfind("param.", 0) == 0)
            params.set(key.substr(6), value);
        else
            header.set(key, value);
    }

    Dataset ds;
    const auto task = header.get("task");
    if (!task) throw format_error("dataset header lacks task");
    ds.spec = TaskSpec::from_config(static_cast<int>(parse_int(*task, "task")), params);
    ds.seed = header.get_uint("seed", 0);
    std::vector<std::string> vocab;
    std::istringstream vs(header.get_string("vocab", ""));
    for (std::string t; vs >> t;) vocab.push_back(t);
    ds.vocabulary = Vocabulary(std::move(vocab));
    auto read_indices = [&](const char* key) {
        std::vector<std::size_t> idx;
        if (auto v = header.get(key))
            for (const auto& piece : split_list(*v)) idx.push_back(parse_uint(piece, key));
        return idx;
    };
    ds.train_indices = read_indices("train");
    ds.test_indices = read_indices("test");

    const auto expected = header.get_uint("count", 0);
    while (next_line()) {
        if (line.empty()) continue;
        std::vector<std::string> tokens;
        std::istringstream ts(line);
        for (std::string t; ts >> t;) tokens.push_back(t);
        if (!next_line()) throw fail("token line without mask line");
        std::vector<std::uint8_t> mask;
        std::istringstream ms(line);
        for (std::string m; ms >> m;) {
            if (m != "0" && m != "1") throw fail("mask entries must be 0 or 1");
            mask.push_back(m == "1" ? 1 : 0);
        }
        if (mask.size() != tokens.size()) throw fail("mask length differs from token count");
        TaskSample s;
        try {
            s.tokens = ds.vocabulary.encode(tokens);
        } catch (const vocabulary_error& e) {
            throw fail(e.what());
        }
        s.mask = std::move(mask);
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.size() != expected)
        throw format_error("dataset declares " + std::to_string(expected) + " samples but holds " +
                           std::to_string(ds.samples.size()));
    return ds;
}

}  // namespace wadebench::corpus
