#pragma once

// Seeded generators for the ten benchmark tasks, prediction masks, vocabulary
// handling and the plain-text dataset format.

#include "wadebench/config.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wadebench {
class Rng;
}

namespace wadebench::corpus {

using TokenId = std::int32_t;

inline constexpr int num_tasks = 10;

/// Dense bijection between token strings and ids 0..L-1.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> tokens);

    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

    const std::string& token(TokenId id) const;
    TokenId id(std::string_view token) const;
    bool contains(std::string_view token) const;

    std::vector<TokenId> encode(std::span<const std::string> tokens) const;
    std::vector<std::string> decode(std::span<const TokenId> ids) const;

    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, TokenId> ids_;
};

/// One generated sequence. mask[t] marks positions whose token is supervised.
struct TaskSample {
    std::vector<TokenId> tokens;
    std::vector<std::uint8_t> mask;

    std::size_t size() const { return tokens.size(); }
    std::size_t masked_count() const;
    bool operator==(const TaskSample&) const = default;
};

/// Generation parameters. Only the fields relevant to `task_id` are used;
/// `defaults(task_id)` fills them with the benchmark settings.
struct TaskSpec {
    int task_id = 1;

    // Tasks 1-2: pattern length range and total sequence length.
    int min_pattern_length = 1;
    int max_pattern_length = 10;
    int sequence_length = 100;

    // Tasks 3-4: prompt alphabet, prompt length range and number of queries.
    std::vector<std::string> symbols{"A", "B", "C"};
    int min_prompt_length = 1;
    int max_prompt_length = 10;
    int min_queries = 1;
    int max_queries = 3;

    // Tasks 5-10: word inventory sizes (prefixes of the built-in lists),
    // items per statement, statements per sample and questions per sample.
    int num_names = 5;
    int num_verbs = 2;
    int num_colors = 0;
    int num_sizes = 0;
    int min_items = 1;
    int max_items = 5;
    int min_statements = 1;
    int max_statements = 1;
    int min_questions = 1;
    int max_questions = 1;

    static TaskSpec defaults(int task_id);

    /// Throws config_error on an unknown task or degenerate parameters.
    void validate() const;

    /// Relevant parameters as key-value pairs (for dataset headers).
    KeyValueConfig to_config() const;
    static TaskSpec from_config(int task_id, const KeyValueConfig& params);

    bool operator==(const TaskSpec&) const = default;
};

/// The full token inventory a task can emit, in a fixed order.
Vocabulary task_vocabulary(const TaskSpec& spec);

/// Tokens that can appear at supervised positions for tasks 3-10.
std::vector<std::string> answer_tokens(const TaskSpec& spec);

struct Dataset {
    TaskSpec spec;
    std::uint64_t seed = 0;
    Vocabulary vocabulary;
    std::vector<TaskSample> samples;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;

    bool operator==(const Dataset&) const = default;
};

/// Generate one sample as token strings; the mask comes from derive_mask.
std::vector<std::string> generate_tokens(const TaskSpec& spec, Rng& rng);

/// `count` samples, a pure function of (spec, seed, count).
Dataset generate(const TaskSpec& spec, std::uint64_t seed, std::size_t count);

/// Supervised positions of a generated sequence. Tasks 3-10 mark the answer
/// tokens; tasks 1-2 mark everything from the start of the second period.
std::vector<std::uint8_t> derive_mask(int task_id, std::span<const std::string> tokens);

/// Smallest base period that reproduces a task-1 or task-2 sequence.
std::size_t inferred_period(int task_id, std::span<const std::string> tokens);

/// One-hot column vector of length L. Throws index_error when out of range.
Eigen::VectorXd encode_one_hot(TokenId id, std::size_t vocabulary_size);

/// Assign a seeded random train/test partition: round(ratio*N) train samples.
Dataset split(Dataset dataset, double ratio, std::uint64_t seed);

/// Brute-force count over the prompt region (tokens before the first "x").
/// A single-symbol query on a separator-free prompt counts symbol
/// occurrences; otherwise the prompt is split on "y" and whole patterns equal
/// to `query` are counted. Throws format_error if there is no "x".
int count_oracle(std::span<const std::string> tokens, std::span<const std::string> query);

/// For the world-definition tasks: the number of distinct things stated as
/// perceived with `verb` (affirmative clauses only) in the statements before
/// `end`. Parses the statements independently of the generator.
int world_count_oracle(std::span<const std::string> tokens, std::string_view verb, std::size_t end);

/// Number word used for counting answers ("ZERO", "ONE", ...).
const std::string& number_word(int n);

/// Dataset text format: header lines, "---", then a token line and a mask line
/// per sample.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

}  // namespace wadebench::corpus
