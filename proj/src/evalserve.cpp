#include "wadebench/evalserve.hpp"

#include "wadebench/errors.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <istream>

namespace wadebench::evalserve {

namespace {

const std::string& letters()
{
    static const std::string s = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";
    return s;
}

int http_status(error_kind kind)
{
    switch (kind) {
    case error_kind::session:
    case error_kind::empty_score:
        return 409;
    case error_kind::io:
        return 500;
    default:
        return 400;
    }
}

std::vector<std::size_t> hidden_positions(const std::vector<std::uint8_t>& mask)
{
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < mask.size(); ++t)
        if (mask[t]) out.push_back(t);
    return out;
}

nlohmann::json curve_json(const metric::AccuracyCurve& curve)
{
    auto arr = nlohmann::json::array();
    for (const auto& p : curve.points()) arr.push_back({p.step, p.accuracy});
    return arr;
}

}  // namespace

void SessionConfig::validate() const
{
    if (tasks.empty()) throw config_error("session task pool must be nonempty");
    for (int t : tasks)
        if (t < 1 || t > corpus::num_tasks) throw config_error("unknown task " + std::to_string(t));
    if (streak_goal < 1) throw config_error("streak goal must be >= 1");
}

// ---------------------------------------------------------- obfuscation ---

Obfuscation::Obfuscation(const corpus::Vocabulary& vocabulary, Rng& rng)
{
    std::vector<std::string> codes;
    if (vocabulary.size() <= letters().size()) {
        for (char c : letters()) codes.emplace_back(1, c);
    } else {
        for (char a : letters())
            for (char b : letters()) codes.push_back(std::string{a, b});
        if (vocabulary.size() > codes.size()) throw config_error("vocabulary too large to obfuscate");
    }
    rng.shuffle(codes);
    for (std::size_t i = 0; i < vocabulary.size(); ++i) {
        forward_[vocabulary.tokens()[i]] = codes[i];
        backward_[codes[i]] = vocabulary.tokens()[i];
    }
}

const std::string& Obfuscation::encode(const std::string& token) const
{
    auto it = forward_.find(token);
    if (it == forward_.end()) throw vocabulary_error("token '" + token + "' has no code");
    return it->second;
}

const std::string& Obfuscation::decode(const std::string& code) const
{
    auto it = backward_.find(code);
    if (it == backward_.end()) throw vocabulary_error("unknown code '" + code + "'");
    return it->second;
}

// -------------------------------------------------------------- session ---

EvalSession::EvalSession(std::string id, std::uint64_t seed, SessionConfig config)
    : id_(std::move(id)), seed_(seed), config_(std::move(config)), rng_(seed)
{
    config_.validate();
    task_order_ = config_.tasks;
    rng_.shuffle(task_order_);
    start_task();
}

void EvalSession::start_task()
{
    task_ = task_order_[task_index_];
    spec_ = corpus::TaskSpec::defaults(task_);
    obfuscation_ = Obfuscation(corpus::task_vocabulary(spec_), rng_);
    question_ = 0;
    streak_ = 0;
    segments_.push_back(Segment{task_, {}, 0, false});
    next_question();
}

void EvalSession::next_question()
{
    do {
        tokens_ = corpus::generate_tokens(spec_, rng_);
        mask_ = corpus::derive_mask(task_, tokens_);
    } while (std::none_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; }));
    ++question_;
    segments_.back().questions = question_;
}

void EvalSession::close_streak()
{
    if (streak_ > 0)
        segments_.back().curve.push_back(
            {streak_start_, static_cast<double>(streak_) / static_cast<double>(config_.streak_goal)});
    streak_ = 0;
}

Question EvalSession::current() const
{
    Question q;
    q.hidden = hidden_positions(mask_);
    q.sequence.reserve(tokens_.size());
    for (std::size_t t = 0; t < tokens_.size(); ++t)
        q.sequence.push_back(mask_[t] ? std::string(blank_token) : obfuscation_.encode(tokens_[t]));
    return q;
}

AnswerOutcome EvalSession::submit(const std::vector<std::string>& answers)
{
    if (finished_) throw session_error("session " + id_ + " has finished");
    const auto hidden = hidden_positions(mask_);
    if (answers.size() != hidden.size())
        throw format_error("expected " + std::to_string(hidden.size()) + " answers, got " +
                           std::to_string(answers.size()));
    AnswerOutcome out;
    out.correct = true;
    for (std::size_t k = 0; k < hidden.size(); ++k)
        if (answers[k] != obfuscation_.encode(tokens_[hidden[k]])) out.correct = false;
    for (const auto& t : tokens_) out.revealed.push_back(obfuscation_.encode(t));
    ++answered_;

    if (out.correct) {
        if (streak_ == 0) streak_start_ = question_;
        ++streak_;
        out.streak = streak_;
        if (streak_ == config_.streak_goal) {
            close_streak();
            segments_.back().completed = true;
            ++task_index_;
            out.task_switched = true;
            if (task_index_ == task_order_.size()) {
                finished_ = true;
                out.finished = true;
                return out;
            }
            start_task();
            out.next = current();
            return out;
        }
    } else {
        close_streak();
        out.streak = 0;
    }
    next_question();
    out.next = current();
    return out;
}

Score EvalSession::score() const
{
    if (answered_ == 0) throw empty_score_error("session " + id_ + " has no answered questions yet");
    Score s;
    s.segments = segments_;
    for (auto it = segments_.rbegin(); it != segments_.rend(); ++it)
        if (!it->curve.empty()) {
            s.curve = it->curve;
            break;
        }
    s.wade = metric::wade(s.curve);
    return s;
}

// -------------------------------------------------------------- service ---

nlohmann::json error_body(std::string_view code, const std::string& message)
{
    return {{"error", {{"code", code}, {"message", message}}}};
}

nlohmann::json score_json(const Score& score)
{
    auto segments = nlohmann::json::array();
    for (std::size_t i = 0; i < score.segments.size(); ++i) {
        const auto& seg = score.segments[i];
        segments.push_back({{"index", i + 1},
                            {"questions", seg.questions},
                            {"completed", seg.completed},
                            {"curve", curve_json(seg.curve)},
                            {"wade", metric::wade(seg.curve)}});
    }
    return {{"curve", curve_json(score.curve)}, {"wade", score.wade}, {"segments", segments}};
}

EvalService::EvalService(ServiceConfig config) : config_(std::move(config))
{
    config_.session.validate();
    if (config_.transcript) {
        log_ = std::make_unique<std::ofstream>(*config_.transcript, std::ios::app);
        if (!*log_) throw io_error("cannot open transcript " + config_.transcript->string());
    }
}

EvalService::~EvalService()
{
    stop();
}

void EvalService::log(const nlohmann::json& event)
{
    if (!log_) return;
    std::lock_guard lock(log_mutex_);
    *log_ << event.dump() << '\n';
    log_->flush();
}

std::shared_ptr<EvalService::Entry> EvalService::find(const std::string& id) const
{
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::shared_ptr<EvalSession> EvalService::session(const std::string& id) const
{
    auto e = find(id);
    return e ? e->session : nullptr;
}

std::size_t EvalService::session_count() const
{
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

nlohmann::json EvalService::create_session()
{
    auto entry = std::make_shared<Entry>();
    std::string id;
    std::uint64_t seed = 0;
    {
        std::unique_lock lock(sessions_mutex_);
        const std::uint64_t n = counter_++;
        seed = derive_seed(config_.seed, {fnv1a("session"), n});
        id = fmt::format("{:016x}", derive_seed(config_.seed, {fnv1a("session-id"), n}));
        entry->session = std::make_shared<EvalSession>(id, seed, config_.session);
        sessions_[id] = entry;
    }
    std::lock_guard lock(entry->mutex);
    log({{"event", "create"},
         {"session", id},
         {"seed", seed},
         {"tasks", config_.session.tasks},
         {"streak_goal", config_.session.streak_goal}});
    const auto q = entry->session->current();
    return {{"session_id", id}, {"sequence", q.sequence}, {"hidden", q.hidden}, {"question", 1}};
}

nlohmann::json EvalService::submit_answer(const std::string& id, const nlohmann::json& body)
{
    auto entry = find(id);
    if (!entry) throw session_error("unknown session " + id);
    if (!body.is_object() || !body.contains("answers") || !body["answers"].is_array())
        throw format_error("body must be an object with an 'answers' array");
    std::vector<std::string> answers;
    for (const auto& a : body["answers"]) {
        if (!a.is_string()) throw format_error("answers must be strings");
        answers.push_back(a.get<std::string>());
    }
    std::lock_guard lock(entry->mutex);
    const auto out = entry->session->submit(answers);
    log({{"event", "answer"}, {"session", id}, {"answers", answers}});
    return {{"correct", out.correct},
            {"revealed", out.revealed},
            {"streak", out.streak},
            {"next_sequence", out.next.sequence},
            {"next_hidden", out.next.hidden},
            {"task_switched", out.task_switched},
            {"finished", out.finished},
            {"question", out.finished ? 0 : entry->session->question_number()}};
}

nlohmann::json EvalService::score(const std::string& id)
{
    auto entry = find(id);
    if (!entry) throw session_error("unknown session " + id);
    std::lock_guard lock(entry->mutex);
    return score_json(entry->session->score());
}

HttpReply EvalService::handle(const std::string& method, const std::string& path, const std::string& body)
{
    auto reply = [](int status, const nlohmann::json& j) { return HttpReply{status, j.dump()}; };
    try {
        if (method == "GET" && path == "/health") return HttpReply{200, "ok"};
        if (method == "POST" && path == "/session") return reply(200, create_session());

        const std::string prefix = "/session/";
        if (path.rfind(prefix, 0) == 0) {
            const auto rest = path.substr(prefix.size());
            const auto slash = rest.find('/');
            if (slash != std::string::npos) {
                const auto id = rest.substr(0, slash);
                const auto action = rest.substr(slash + 1);
                const bool known = find(id) != nullptr;
                if ((action == "answer" && method == "POST") || (action == "score" && method == "GET")) {
                    if (!known) return reply(404, error_body("not_found", "unknown session " + id));
                    if (action == "score") return reply(200, score(id));
                    nlohmann::json parsed;
                    try {
                        parsed = nlohmann::json::parse(body);
                    } catch (const nlohmann::json::exception& e) {
                        throw format_error(std::string("malformed JSON body: ") + e.what());
                    }
                    return reply(200, submit_answer(id, parsed));
                }
            }
        }
        return reply(404, error_body("not_found", "no route for " + method + " " + path));
    } catch (const error& e) {
        return reply(http_status(e.kind()), error_body(e.code(), e.what()));
    } catch (const std::exception& e) {
        return reply(500, error_body("internal", e.what()));
    }
}

void EvalService::install_routes()
{
    server_ = std::make_unique<httplib::Server>();
    auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
        const auto r = handle(req.method, req.path, req.body);
        res.status = r.status;
        const bool plain = req.path == "/health" && r.status == 200;
        res.set_content(r.body, plain ? "text/plain" : "application/json");
    };
    server_->Get(R"(/.*)", dispatch);
    server_->Post(R"(/.*)", dispatch);
}

int EvalService::start(const std::string& host, int port)
{
    stop();
    install_routes();
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw io_error("cannot bind " + host + ":" + std::to_string(port));
    server_thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void EvalService::listen(const std::string& host, int port)
{
    stop();
    install_routes();
    if (!server_->listen(host, port)) throw io_error("cannot listen on " + host + ":" + std::to_string(port));
}

void EvalService::stop()
{
    if (server_) server_->stop();
    if (server_thread_.joinable()) server_thread_.join();
}

std::map<std::string, std::shared_ptr<EvalSession>> replay_transcript(std::istream& in, const SessionConfig& config)
{
    std::map<std::string, std::shared_ptr<EvalSession>> sessions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            const auto ev = nlohmann::json::parse(line);
            const auto kind = ev.at("event").get<std::string>();
            const auto id = ev.at("session").get<std::string>();
            if (kind == "create") {
                SessionConfig c = config;
                if (ev.contains("tasks")) c.tasks = ev["tasks"].get<std::vector<int>>();
                if (ev.contains("streak_goal")) c.streak_goal = ev["streak_goal"].get<int>();
                sessions[id] = std::make_shared<EvalSession>(id, ev.at("seed").get<std::uint64_t>(), c);
            } else if (kind == "answer") {
                auto it = sessions.find(id);
                if (it == sessions.end()) throw format_error("answer for unknown session " + id);
                it->second->submit(ev.at("answers").get<std::vector<std::string>>());
            } else {
                throw format_error("unknown event '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw format_error("transcript line " + std::to_string(line_no) + ": " + e.what());
        } catch (const error& e) {
            throw format_error("transcript line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return sessions;
}

}  // namespace wadebench::evalserve
