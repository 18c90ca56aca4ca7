#pragma once

// Human evaluation sessions over HTTP. Each session walks through tasks one
// at a time: sequences are shown with every token replaced by a random letter
// code and the supervised positions blanked; after each answer the full
// (still obfuscated) sequence is revealed. A run of correct answers of length
// s scores s / goal at the question where the run started, recorded when the
// run ends. Reaching the goal moves the session to a new task with a new code
// map.

#include "wadebench/corpus.hpp"
#include "wadebench/metric.hpp"
#include "wadebench/rng.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace wadebench::evalserve {

/// Shown in place of a hidden token.
inline constexpr const char* blank_token = "_";

struct SessionConfig {
    /// Pool of tasks; a session visits each once in random order.
    std::vector<int> tasks{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    /// Correct answers in a row that complete a task.
    int streak_goal = 10;

    void validate() const;
};

/// Token -> code bijection. Codes are single letters (a-z, A-Z) when the
/// vocabulary fits, otherwise two-letter codes.
class Obfuscation {
public:
    Obfuscation() = default;
    Obfuscation(const corpus::Vocabulary& vocabulary, Rng& rng);

    const std::string& encode(const std::string& token) const;
    /// Throws vocabulary_error for an unknown code.
    const std::string& decode(const std::string& code) const;
    const std::map<std::string, std::string>& forward() const { return forward_; }

private:
    std::map<std::string, std::string> forward_, backward_;
};

struct Question {
    /// Obfuscated tokens with hidden positions shown as blank_token.
    std::vector<std::string> sequence;
    std::vector<std::size_t> hidden;
};

struct AnswerOutcome {
    bool correct = false;
    /// The full obfuscated sequence of the answered question.
    std::vector<std::string> revealed;
    int streak = 0;
    bool task_switched = false;
    bool finished = false;
    /// Next question; empty once the session has finished.
    Question next;
};

/// One task's attempt: the curve is indexed by question number within it.
struct Segment {
    int task = 0;
    metric::AccuracyCurve curve;
    int questions = 0;
    bool completed = false;
};

struct Score {
    metric::AccuracyCurve curve;
    double wade = 0.0;
    std::vector<Segment> segments;
};

class EvalSession {
public:
    EvalSession(std::string id, std::uint64_t seed, SessionConfig config = {});

    const std::string& id() const { return id_; }
    std::uint64_t seed() const { return seed_; }
    int task() const { return task_; }
    /// 1-based question number within the current task.
    int question_number() const { return question_; }
    int streak() const { return streak_; }
    bool finished() const { return finished_; }
    const Obfuscation& obfuscation() const { return obfuscation_; }

    Question current() const;
    /// Ground truth of the current question (original tokens) and its mask.
    const std::vector<std::string>& current_tokens() const { return tokens_; }
    const std::vector<std::uint8_t>& current_mask() const { return mask_; }

    /// One answer (obfuscated code) per hidden position. Throws
    /// session_error once finished and format_error on an arity mismatch.
    AnswerOutcome submit(const std::vector<std::string>& answers);

    const std::vector<Segment>& segments() const { return segments_; }
    /// Curve of the latest task segment that has points, and its WADE.
    /// Throws empty_score_error before any question has been answered.
    Score score() const;

private:
    void start_task();
    void next_question();
    void close_streak();

    std::string id_;
    std::uint64_t seed_;
    SessionConfig config_;
    Rng rng_;
    std::vector<int> task_order_;
    std::size_t task_index_ = 0;
    int task_ = 0;
    corpus::TaskSpec spec_;
    Obfuscation obfuscation_;
    std::vector<std::string> tokens_;
    std::vector<std::uint8_t> mask_;
    int question_ = 0;
    int streak_ = 0;
    int streak_start_ = 0;
    bool finished_ = false;
    int answered_ = 0;
    std::vector<Segment> segments_;
};

struct ServiceConfig {
    std::uint64_t seed = 0;
    SessionConfig session;
    /// Append-only JSON-lines log of session creations and answers.
    std::optional<std::filesystem::path> transcript;
};

struct HttpReply {
    int status = 200;
    std::string body;
};

class EvalService {
public:
    explicit EvalService(ServiceConfig config = {});
    ~EvalService();

    EvalService(const EvalService&) = delete;
    EvalService& operator=(const EvalService&) = delete;

    nlohmann::json create_session();
    nlohmann::json submit_answer(const std::string& id, const nlohmann::json& body);
    nlohmann::json score(const std::string& id);

    /// Transport-independent routing: the same handlers the HTTP server uses.
    HttpReply handle(const std::string& method, const std::string& path, const std::string& body);

    /// Binds and serves on a background thread; returns the bound port
    /// (pass 0 for any free port). Throws io_error if binding fails.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void listen(const std::string& host, int port);
    void stop();

    std::shared_ptr<EvalSession> session(const std::string& id) const;
    std::size_t session_count() const;

private:
    struct Entry {
        std::mutex mutex;
        std::shared_ptr<EvalSession> session;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    void log(const nlohmann::json& event);
    void install_routes();

    ServiceConfig config_;
    std::uint64_t counter_ = 0;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mutex log_mutex_;
    std::unique_ptr<std::ofstream> log_;
    std::unique_ptr<httplib::Server> server_;
    std::thread server_thread_;
};

/// Rebuilds every session in a transcript by re-creating it from its seed
/// and re-submitting the logged answers.
std::map<std::string, std::shared_ptr<EvalSession>> replay_transcript(std::istream& in,
                                                                      const SessionConfig& config = {});

/// JSON body of a score.
nlohmann::json score_json(const Score& score);
/// Stable error body {"error": {"code": ..., "message": ...}}.
nlohmann::json error_body(std::string_view code, const std::string& message);

}  // namespace wadebench::evalserve
