// Per-task token generators, task vocabularies and parameter handling.

#include "wadebench/corpus.hpp"
#include "wadebench/errors.hpp"
#include "wadebench/rng.hpp"

#include <algorithm>
#include <array>
#include <set>

namespace wadebench::corpus {
namespace {

const std::vector<std::string> kNames = {"PETER", "JOHN",  "TOM",    "JAMES", "PAUL",
                                         "MARC",  "LUKE",  "SIMON",  "ANDREW", "BRUNO",
                                         "LISA",  "HENRI", "LEO"};
const std::vector<std::string> kVerbs = {"SEE", "HEAR", "CALL", "FEEL", "SMELL", "TOUCH", "UNDERSTAND"};
const std::vector<std::string> kObjects = {"BANANA", "APPLE", "PEAR",  "PEACH",
                                           "APRICOT", "CAR",  "PLANE", "TRAIN"};
const std::vector<std::string> kColors = {"RED", "GREEN", "BLUE", "YELLOW"};
const std::vector<std::string> kSizes = {"SMALL", "LARGE", "BIG", "HUGE", "TINY"};
const std::vector<std::string> kNumbers = {"ZERO", "ONE", "TWO",   "THREE", "FOUR",   "FIVE", "SIX",
                                           "SEVEN", "EIGHT", "NINE", "TEN", "ELEVEN", "TWELVE"};

bool is_adjective_task(int id) { return id == 9 || id == 10; }
bool is_language_task(int id) { return id >= 5 && id <= 10; }
bool has_count_questions(int id) { return id == 8 || id == 10; }

using Tokens = std::vector<std::string>;

void append(Tokens& out, const Tokens& more) { out.insert(out.end(), more.begin(), more.end()); }

// ---------------------------------------------------------------- binary ---

Tokens random_bits(int length, Rng& rng)
{
    Tokens bits;
    bits.reserve(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) bits.emplace_back(rng.coin() ? "1" : "0");
    return bits;
}

Tokens periodic(const TaskSpec& spec, Rng& rng)
{
    const int period = rng.uniform_int(spec.min_pattern_length, spec.max_pattern_length);
    const Tokens pattern = random_bits(period, rng);
    Tokens out;
    out.reserve(static_cast<std::size_t>(spec.sequence_length));
    for (int i = 0; i < spec.sequence_length; ++i)
        out.push_back(pattern[static_cast<std::size_t>(i % period)]);
    return out;
}

Tokens increasing_period(const TaskSpec& spec, Rng& rng)
{
    const int period = rng.uniform_int(spec.min_pattern_length, spec.max_pattern_length);
    const Tokens pattern = random_bits(period, rng);
    const auto length = static_cast<std::size_t>(spec.sequence_length);
    Tokens out;
    out.reserve(length);
    for (int repeat = 1; out.size() < length; ++repeat) {
        for (const auto& symbol : pattern)
            for (int r = 0; r < repeat && out.size() < length; ++r) out.push_back(symbol);
    }
    return out;
}

// -------------------------------------------------------------- counting ---

Tokens symbol_counting(const TaskSpec& spec, Rng& rng)
{
    const int length = rng.uniform_int(spec.min_prompt_length, spec.max_prompt_length);
    Tokens out;
    for (int i = 0; i < length; ++i) out.push_back(rng.pick(spec.symbols));

    const int n_symbols = static_cast<int>(spec.symbols.size());
    const int n_queries = rng.uniform_int(spec.min_queries, std::min(spec.max_queries, n_symbols));
    const Tokens prompt = out;
    for (int idx : rng.sample_without_replacement(n_symbols, n_queries)) {
        const auto& symbol = spec.symbols[static_cast<std::size_t>(idx)];
        const auto count = std::count(prompt.begin(), prompt.end(), symbol);
        append(out, {"x", symbol, std::to_string(count)});
    }
    return out;
}

Tokens pattern_counting(const TaskSpec& spec, Rng& rng)
{
    const int length = rng.uniform_int(spec.min_prompt_length, spec.max_prompt_length);
    Tokens prompt;
    for (int i = 0; i < length; ++i) {
        const bool can_separate = i > 0 && i + 1 < length && prompt.back() != "y";
        if (can_separate && rng.coin(1.0 / 3.0))
            prompt.emplace_back("y");
        else
            prompt.push_back(rng.pick(spec.symbols));
    }

    // Distinct patterns in first-occurrence order with their counts.
    std::vector<Tokens> patterns;
    std::vector<int> counts;
    Tokens current;
    auto flush = [&] {
        auto it = std::find(patterns.begin(), patterns.end(), current);
        if (it == patterns.end()) {
            patterns.push_back(current);
            counts.push_back(1);
        } else {
            ++counts[static_cast<std::size_t>(it - patterns.begin())];
        }
        current.clear();
    };
    for (const auto& tok : prompt) {
        if (tok == "y")
            flush();
        else
            current.push_back(tok);
    }
    flush();

    const int n_patterns = static_cast<int>(patterns.size());
    const int n_queries =
      rng.uniform_int(std::min(spec.min_queries, n_patterns), std::min(spec.max_queries, n_patterns));
    Tokens out = prompt;
    out.emplace_back("x");
    for (int idx : rng.sample_without_replacement(n_patterns, n_queries)) {
        append(out, patterns[static_cast<std::size_t>(idx)]);
        out.emplace_back("y");
        out.push_back(std::to_string(counts[static_cast<std::size_t>(idx)]));
    }
    return out;
}

// -------------------------------------------------------------- language ---

// An item is a name (tasks 5-8) or an article + adjectives + noun phrase.
struct Item {
    std::string noun;
    std::string size;   // empty when absent
    std::string color;  // empty when absent
};

struct Statement {
    std::string verb;
    std::vector<Item> affirmed;
    std::vector<Item> denied;
};

std::string article_for(const std::string& first_word)
{
    return std::string("AEIOU").find(first_word.front()) != std::string::npos ? "AN" : "A";
}

Tokens phrase(const Item& item, bool with_size, bool with_color, bool adjective_task)
{
    if (!adjective_task) return {item.noun};
    Tokens words;
    if (with_size && !item.size.empty()) words.push_back(item.size);
    if (with_color && !item.color.empty()) words.push_back(item.color);
    words.push_back(item.noun);
    Tokens out{article_for(words.front())};
    append(out, words);
    return out;
}

Tokens item_list(const std::vector<Item>& items, bool adjective_task)
{
    Tokens out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out.emplace_back("AND");
        append(out, phrase(items[i], true, true, adjective_task));
    }
    return out;
}

Tokens render_statement(const Statement& st, bool adjective_task, Rng& rng)
{
    Tokens yes;
    Tokens no;
    if (!st.affirmed.empty()) {
        yes = {"I", st.verb};
        append(yes, item_list(st.affirmed, adjective_task));
    }
    if (!st.denied.empty()) {
        no = {"I", "DO", "NOT", st.verb};
        append(no, item_list(st.denied, adjective_task));
    }
    if (yes.empty()) return no;
    if (no.empty()) return yes;

    const bool denial_first = rng.coin();
    const std::string link = rng.coin() ? "AND" : "BUT";
    Tokens out = denial_first ? no : yes;
    out.push_back(link);
    append(out, denial_first ? yes : no);
    return out;
}

std::vector<Item> draw_items(const TaskSpec& spec, Rng& rng, bool adjective_task)
{
    const int n = rng.uniform_int(spec.min_items, spec.max_items);
    const auto& pool = adjective_task ? kObjects : kNames;
    std::vector<Item> items;
    for (int idx : rng.sample_without_replacement(spec.num_names, n)) {
        Item item{pool[static_cast<std::size_t>(idx)], {}, {}};
        if (adjective_task) {
            if (spec.num_sizes > 0 && rng.coin())
                item.size = kSizes[rng.below(static_cast<std::uint64_t>(spec.num_sizes))];
            if (spec.num_colors > 0 && rng.coin())
                item.color = kColors[rng.below(static_cast<std::uint64_t>(spec.num_colors))];
        }
        items.push_back(item);
    }
    return items;
}

// Splits items into affirmed/denied with a uniformly drawn affirmed count.
Statement make_statement(std::string verb, std::vector<Item> items, int affirmed_count)
{
    Statement st{std::move(verb), {}, {}};
    for (std::size_t i = 0; i < items.size(); ++i)
        (static_cast<int>(i) < affirmed_count ? st.affirmed : st.denied).push_back(items[i]);
    return st;
}

Tokens yes_no_question(const std::vector<Statement>& world, bool adjective_task, Rng& rng)
{
    struct Candidate {
        const Statement* st;
        const Item* item;
    };
    std::vector<Candidate> positives;
    std::vector<Candidate> negatives;
    for (const auto& st : world) {
        for (const auto& it : st.affirmed) positives.push_back({&st, &it});
        for (const auto& it : st.denied) negatives.push_back({&st, &it});
    }
    bool answer_yes = rng.coin();
    if (answer_yes && positives.empty()) answer_yes = false;
    if (!answer_yes && negatives.empty()) answer_yes = true;
    const auto& chosen = answer_yes ? positives : negatives;
    const Candidate c = chosen[rng.below(chosen.size())];

    Tokens q{"DO", "I", c.st->verb};
    const bool with_size = rng.coin();
    const bool with_color = rng.coin();
    append(q, phrase(*c.item, with_size, with_color, adjective_task));
    q.emplace_back("?");
    q.emplace_back(answer_yes ? "YES" : "NO");
    return q;
}

bool has_adjective(const Item& item) { return !item.size.empty() || !item.color.empty(); }

Tokens adjective_question(const std::vector<Statement>& world, Rng& rng)
{
    std::vector<std::pair<const Statement*, const Item*>> candidates;
    for (const auto& st : world)
        for (const auto& it : st.affirmed)
            if (has_adjective(it)) candidates.emplace_back(&st, &it);
    const auto [st, item] = candidates[rng.below(candidates.size())];

    bool ask_size = !item->size.empty();
    if (!item->size.empty() && !item->color.empty()) ask_size = rng.coin();
    return {"WHAT", "IS", "THE", ask_size ? "SIZE" : "COLOR", "OF", "THE", item->noun, "I", st->verb, "?",
            ask_size ? item->size : item->color};
}

Tokens count_question(const std::vector<Statement>& world, bool adjective_task, Rng& rng)
{
    const auto& st = world[rng.below(world.size())];
    return {"HOW", "MANY", adjective_task ? "THINGS" : "PEOPLE", "DO", "I", st.verb, "?",
            number_word(static_cast<int>(st.affirmed.size()))};
}

// Tasks 5 and 6: a single statement and one balanced YES/NO question.
Tokens elementary_qa(const TaskSpec& spec, Rng& rng)
{
    const std::string& verb = kVerbs[rng.below(static_cast<std::uint64_t>(spec.num_verbs))];
    std::vector<Item> items = draw_items(spec, rng, false);
    const int n = static_cast<int>(items.size());

    const bool answer_yes = rng.coin();
    const int affirmed = answer_yes ? rng.uniform_int(1, n) : rng.uniform_int(0, n - 1);
    rng.shuffle(items);
    Statement st = make_statement(verb, items, affirmed);

    const auto& pool = answer_yes ? st.affirmed : st.denied;
    const Item& target = pool[rng.below(pool.size())];

    Tokens out = render_statement(st, false, rng);
    append(out, {".", "DO", "I", verb, target.noun, "?", answer_yes ? "YES" : "NO"});
    return out;
}

// Tasks 7-10: several statements with distinct verbs, then questions.
Tokens world_qa(const TaskSpec& spec, Rng& rng)
{
    const int id = spec.task_id;
    const bool adjective_task = is_adjective_task(id);

    const int n_statements = rng.uniform_int(spec.min_statements, spec.max_statements);
    std::vector<Statement> world;
    for (int v : rng.sample_without_replacement(spec.num_verbs, n_statements)) {
        std::vector<Item> items = draw_items(spec, rng, adjective_task);
        const int affirmed = rng.uniform_int(0, static_cast<int>(items.size()));
        world.push_back(make_statement(kVerbs[static_cast<std::size_t>(v)], std::move(items), affirmed));
    }

    Tokens out;
    for (const auto& st : world) {
        append(out, render_statement(st, adjective_task, rng));
        out.emplace_back(".");
    }

    bool adjective_possible = false;
    for (const auto& st : world)
        for (const auto& it : st.affirmed) adjective_possible = adjective_possible || has_adjective(it);

    const int n_questions = rng.uniform_int(spec.min_questions, spec.max_questions);
    std::set<Tokens> asked;
    for (int q = 0; q < n_questions; ++q) {
        // Duplicates are re-drawn a bounded number of times, then dropped.
        for (int attempt = 0; attempt < 8; ++attempt) {
            std::vector<int> kinds{0};  // 0 yes/no, 1 adjective, 2 count
            if (adjective_task && adjective_possible) kinds.push_back(1);
            if (has_count_questions(id)) kinds.push_back(2);
            const int kind = kinds[rng.below(kinds.size())];

            Tokens question;
            if (kind == 0)
                question = yes_no_question(world, adjective_task, rng);
            else if (kind == 1)
                question = adjective_question(world, rng);
            else
                question = count_question(world, adjective_task, rng);

            if (asked.insert(question).second) {
                append(out, question);
                break;
            }
        }
    }
    return out;
}

void require(bool ok, const std::string& message)
{
    if (!ok) throw config_error(message);
}

}  // namespace

const std::string& number_word(int n)
{
    if (n < 0 || n >= static_cast<int>(kNumbers.size()))
        throw index_error("no number word for " + std::to_string(n));
    return kNumbers[static_cast<std::size_t>(n)];
}

TaskSpec TaskSpec::defaults(int task_id)
{
    TaskSpec s;
    s.task_id = task_id;
    switch (task_id) {
    case 1:
    case 2: break;
    case 3: break;
    case 4:
        s.max_prompt_length = 45;
        // Clamped per sample to the number of distinct prompt patterns.
        s.max_queries = 45;
        break;
    case 5:
        s.num_names = 5;
        s.num_verbs = 2;
        break;
    case 6:
        s.num_names = 11;
        s.num_verbs = 5;
        break;
    case 7:
    case 8:
        s.num_names = 13;
        s.num_verbs = 7;
        s.max_items = 3;
        s.max_statements = 4;
        s.max_questions = 3;
        break;
    case 9:
    case 10:
        s.num_names = 8;
        s.num_verbs = 6;
        s.num_colors = 4;
        s.num_sizes = 5;
        s.max_items = 3;
        s.max_statements = 6;
        s.max_questions = 8;
        break;
    default: throw config_error("unknown task id " + std::to_string(task_id) + " (expected 1..10)");
    }
    return s;
}

void TaskSpec::validate() const
{
    require(task_id >= 1 && task_id <= num_tasks, "unknown task id " + std::to_string(task_id));
    if (task_id <= 2) {
        require(min_pattern_length >= 1 && min_pattern_length <= max_pattern_length,
                "pattern length range must satisfy 1 <= min <= max");
        require(sequence_length > max_pattern_length, "sequence_length must exceed max_pattern_length");
        return;
    }
    if (task_id <= 4) {
        require(!symbols.empty(), "counting tasks need at least one symbol");
        std::set<std::string> seen;
        for (const auto& s : symbols) {
            require(!s.empty() && s.find_first_of(" \t\n") == std::string::npos, "invalid symbol '" + s + "'");
            require(s != "x" && s != "y", "symbols 'x' and 'y' are reserved");
            require(s.find_first_not_of("0123456789") != std::string::npos, "numeric symbols are reserved for counts");
            require(seen.insert(s).second, "duplicate symbol '" + s + "'");
        }
        require(min_prompt_length >= 1 && min_prompt_length <= max_prompt_length,
                "prompt length range must satisfy 1 <= min <= max");
        require(min_queries >= 1 && min_queries <= max_queries, "query range must satisfy 1 <= min <= max");
        if (task_id == 3)
            require(max_queries <= static_cast<int>(symbols.size()), "task 3 cannot query more symbols than exist");
        return;
    }
    const bool adjective_task = is_adjective_task(task_id);
    const int name_pool = static_cast<int>(adjective_task ? kObjects.size() : kNames.size());
    const int verb_pool = static_cast<int>(adjective_task ? kVerbs.size() - 1 : kVerbs.size());
    require(num_names >= 1 && num_names <= name_pool,
            "num_names must be in 1.." + std::to_string(name_pool));
    require(num_verbs >= 1 && num_verbs <= verb_pool,
            "num_verbs must be in 1.." + std::to_string(verb_pool));
    require(min_items >= 1 && min_items <= max_items && max_items <= num_names,
            "items per statement must satisfy 1 <= min <= max <= num_names");
    if (task_id >= 7) {
        require(min_statements >= 1 && min_statements <= max_statements && max_statements <= num_verbs,
                "statements must satisfy 1 <= min <= max <= num_verbs");
        require(min_questions >= 1 && min_questions <= max_questions, "question range must satisfy 1 <= min <= max");
    }
    if (has_count_questions(task_id))
        require(max_items < static_cast<int>(kNumbers.size()), "counts beyond TWELVE have no number word");
    if (adjective_task) {
        require(num_colors >= 0 && num_colors <= static_cast<int>(kColors.size()), "num_colors out of range");
        require(num_sizes >= 0 && num_sizes <= static_cast<int>(kSizes.size()), "num_sizes out of range");
    }
}

KeyValueConfig TaskSpec::to_config() const
{
    KeyValueConfig c;
    auto put = [&c](const std::string& k, int v) { c.set(k, std::to_string(v)); };
    if (task_id <= 2) {
        put("min_pattern_length", min_pattern_length);
        put("max_pattern_length", max_pattern_length);
        put("sequence_length", sequence_length);
    } else if (task_id <= 4) {
        std::string joined;
        for (const auto& s : symbols) joined += (joined.empty() ? "" : ",") + s;
        c.set("symbols", joined);
        put("min_prompt_length", min_prompt_length);
        put("max_prompt_length", max_prompt_length);
        put("min_queries", min_queries);
        put("max_queries", max_queries);
    } else {
        put("num_names", num_names);
        put("num_verbs", num_verbs);
        put("min_items", min_items);
        put("max_items", max_items);
        if (task_id >= 7) {
            put("min_statements", min_statements);
            put("max_statements", max_statements);
            put("min_questions", min_questions);
            put("max_questions", max_questions);
        }
        if (is_adjective_task(task_id)) {
            put("num_colors", num_colors);
            put("num_sizes", num_sizes);
        }
    }
    return c;
}

TaskSpec TaskSpec::from_config(int task_id, const KeyValueConfig& p)
{
    TaskSpec s = defaults(task_id);
    auto get = [&p](const char* k, int& field) { field = static_cast<int>(p.get_int(k, field)); };
    get("min_pattern_length", s.min_pattern_length);
    get("max_pattern_length", s.max_pattern_length);
    get("sequence_length", s.sequence_length);
    if (auto sym = p.get("symbols")) s.symbols = split_list(*sym);
    get("min_prompt_length", s.min_prompt_length);
    get("max_prompt_length", s.max_prompt_length);
    get("min_queries", s.min_queries);
    get("max_queries", s.max_queries);
    get("num_names", s.num_names);
    get("num_verbs", s.num_verbs);
    get("num_colors", s.num_colors);
    get("num_sizes", s.num_sizes);
    get("min_items", s.min_items);
    get("max_items", s.max_items);
    get("min_statements", s.min_statements);
    get("max_statements", s.max_statements);
    get("min_questions", s.min_questions);
    get("max_questions", s.max_questions);
    return s;
}

Vocabulary task_vocabulary(const TaskSpec& spec)
{
    spec.validate();
    const int id = spec.task_id;
    Tokens v;
    if (id <= 2) return Vocabulary({"0", "1"});
    if (id <= 4) {
        v = spec.symbols;
        v.emplace_back("x");
        if (id == 4) v.emplace_back("y");
        append(v, answer_tokens(spec));
        return Vocabulary(std::move(v));
    }

    const bool adjective_task = is_adjective_task(id);
    const auto& nouns = adjective_task ? kObjects : kNames;
    v.assign(nouns.begin(), nouns.begin() + spec.num_names);
    v.insert(v.end(), kVerbs.begin(), kVerbs.begin() + spec.num_verbs);
    append(v, {"I", "DO", "NOT", "AND", "BUT", ".", "?"});
    if (adjective_task) {
        append(v, {"A", "AN", "WHAT", "IS", "THE", "OF"});
        if (spec.num_sizes > 0) v.emplace_back("SIZE");
        if (spec.num_colors > 0) v.emplace_back("COLOR");
    }
    if (has_count_questions(id)) append(v, {"HOW", "MANY", adjective_task ? "THINGS" : "PEOPLE"});
    append(v, answer_tokens(spec));
    return Vocabulary(std::move(v));
}

std::vector<std::string> answer_tokens(const TaskSpec& spec)
{
    const int id = spec.task_id;
    Tokens out;
    if (id <= 2) return {"0", "1"};
    if (id == 3) {
        for (int c = 0; c <= spec.max_prompt_length; ++c) out.push_back(std::to_string(c));
        return out;
    }
    if (id == 4) {
        // A prompt of m tokens holds at most ceil(m/2) patterns.
        for (int c = 1; c <= (spec.max_prompt_length + 1) / 2; ++c) out.push_back(std::to_string(c));
        return out;
    }
    out = {"YES", "NO"};
    if (is_adjective_task(id)) {
        out.insert(out.end(), kSizes.begin(), kSizes.begin() + spec.num_sizes);
        out.insert(out.end(), kColors.begin(), kColors.begin() + spec.num_colors);
    }
    if (has_count_questions(id))
        out.insert(out.end(), kNumbers.begin(), kNumbers.begin() + spec.max_items + 1);
    return out;
}

std::vector<std::string> generate_tokens(const TaskSpec& spec, Rng& rng)
{
    switch (spec.task_id) {
    case 1: return periodic(spec, rng);
    case 2: return increasing_period(spec, rng);
    case 3: return symbol_counting(spec, rng);
    case 4: return pattern_counting(spec, rng);
    case 5:
    case 6: return elementary_qa(spec, rng);
    default: break;
    }
    if (is_language_task(spec.task_id)) return world_qa(spec, rng);
    throw config_error("unknown task id " + std::to_string(spec.task_id));
}

}  // namespace wadebench::corpus
