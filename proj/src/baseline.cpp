#include "wadebench/baseline.hpp"

#include "wadebench/errors.hpp"
#include "wadebench/readout.hpp"
#include "wadebench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace wadebench::baseline {

namespace {

Eigen::MatrixXd init_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound)
{
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            double x;
            do {
                x = rng.uniform(-bound, bound);
            } while (x == -bound);  // keep the interval open
            m(i, j) = x;
        }
    return m;
}

Parameters zeros_like(const Parameters& p)
{
    Parameters z;
    z.reserve(p.size());
    for (const auto& m : p) z.push_back(Eigen::MatrixXd::Zero(m.rows(), m.cols()));
    return z;
}

// Cross-entropy of `z` against `target`; writes softmax(z) - onehot to `dz`.
double cross_entropy(const Eigen::VectorXd& z, TokenId target, Eigen::VectorXd& dz)
{
    const double m = z.maxCoeff();
    dz = (z.array() - m).exp().matrix();
    const double sum = dz.sum();
    dz /= sum;
    dz[target] -= 1.0;
    return std::log(sum) + m - z[target];
}

Eigen::Index argmax(const Eigen::Ref<const Eigen::VectorXd>& v)
{
    Eigen::Index best = 0;
    v.maxCoeff(&best);
    return best;
}

std::size_t last_masked(std::span<const std::uint8_t> mask)
{
    for (std::size_t t = mask.size(); t > 0; --t)
        if (mask[t - 1]) return t - 1;
    throw undefined_accuracy_error("sequence has no masked positions");
}

Eigen::ArrayXd sigmoid(const Eigen::ArrayXd& x)
{
    return 1.0 / (1.0 + (-x).exp());
}

// Shared batched evaluation loop: `advance` maps (state, token column) to the
// next state, `readout` maps state to logits.
template <typename Advance, typename Readout>
std::pair<std::size_t, std::size_t> batched_count(std::span<const TaskSample* const> samples, Advance advance,
                                                  Readout readout)
{
    std::size_t max_len = 0;
    for (const auto* s : samples) max_len = std::max(max_len, s->size());
    const auto n = static_cast<Eigen::Index>(samples.size());
    std::vector<TokenId> column_tokens(samples.size());
    std::size_t correct = 0, total = 0;
    for (std::size_t t = 0; t < max_len; ++t) {
        bool any = false;
        for (const auto* s : samples) any = any || (t < s->size() && s->mask[t]);
        if (any) {
            const Eigen::MatrixXd z = readout();
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto* s = samples[static_cast<std::size_t>(j)];
                if (t >= s->size() || !s->mask[t]) continue;
                ++total;
                if (argmax(z.col(j)) == s->tokens[t]) ++correct;
            }
        }
        if (t + 1 == max_len) break;
        for (std::size_t j = 0; j < samples.size(); ++j)
            column_tokens[j] = t < samples[j]->size() ? samples[j]->tokens[t] : -1;
        advance(column_tokens);
    }
    return {correct, total};
}

}  // namespace

std::int64_t rnn_parameter_count(std::int64_t h, std::int64_t L)
{
    return h * h + 2 * h * L;
}

std::int64_t lstm_parameter_count(std::int64_t h, std::int64_t L)
{
    return 4 * (h * h + h * L) + h * L;
}

int match_hidden_size(std::int64_t L, std::int64_t target)
{
    if (L < 1) throw config_error("vocabulary size must be >= 1");
    if (target < 1) throw config_error("parameter target must be positive");
    const double l = static_cast<double>(L);
    const auto h = std::llround(-l + std::sqrt(l * l + static_cast<double>(target)));
    if (h < 1) throw config_error("parameter target " + std::to_string(target) + " gives a degenerate hidden size");
    return static_cast<int>(h);
}

int match_lstm_hidden_size(std::int64_t L, std::int64_t target)
{
    if (L < 1) throw config_error("vocabulary size must be >= 1");
    if (target < 1) throw config_error("parameter target must be positive");
    const double l = static_cast<double>(L);
    const auto h = std::llround((-5.0 * l + std::sqrt(25.0 * l * l + 16.0 * static_cast<double>(target))) / 8.0);
    if (h < 1) throw config_error("parameter target " + std::to_string(target) + " gives a degenerate hidden size");
    return static_cast<int>(h);
}

// ------------------------------------------------------------------ base ---

SequenceModel::SequenceModel(int hidden, std::size_t vocabulary) : hidden_(hidden), vocabulary_(vocabulary)
{
    if (hidden < 1) throw config_error("hidden size must be >= 1");
    if (vocabulary < 1) throw config_error("vocabulary size must be >= 1");
}

std::int64_t SequenceModel::parameter_count() const
{
    std::int64_t n = 0;
    for (const auto& m : params_) n += m.size();
    return n;
}

void SequenceModel::check_sequence(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const
{
    if (tokens.size() != mask.size()) throw shape_error("tokens and mask differ in length");
    for (TokenId t : tokens)
        if (t < 0 || static_cast<std::size_t>(t) >= vocabulary_)
            throw vocabulary_error("token id " + std::to_string(t) + " outside vocabulary of size " +
                                   std::to_string(vocabulary_));
}

double SequenceModel::loss(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const
{
    check_sequence(tokens, mask);
    const Eigen::MatrixXd z = logits(tokens);
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_));
    Eigen::VectorXd dz;
    double total = 0.0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (!mask[t]) continue;
        total += cross_entropy(t == 0 ? z0 : Eigen::VectorXd(z.col(static_cast<Eigen::Index>(t) - 1)), tokens[t], dz);
    }
    return total;
}

void SequenceModel::save(std::ostream& out) const
{
    out << "#wadebench-model " << name() << ' ' << hidden_ << ' ' << vocabulary_ << ' ' << params_.size() << '\n';
    for (const auto& m : params_) readout::write_matrix(out, m);
}

void SequenceModel::load(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw format_error("model line 1: missing header");
    std::istringstream header(line);
    std::string tag, kind;
    int hidden = 0;
    std::size_t vocab = 0, count = 0;
    if (!(header >> tag >> kind >> hidden >> vocab >> count) || tag != "#wadebench-model")
        throw format_error("model line 1: expected '#wadebench-model NAME H L COUNT'");
    if (kind != name() || hidden != hidden_ || vocab != vocabulary_ || count != params_.size())
        throw format_error("model checkpoint does not match this " + name() + " (h=" + std::to_string(hidden_) + ")");
    Parameters loaded;
    for (std::size_t k = 0; k < count; ++k) {
        loaded.push_back(readout::read_matrix(in));
        if (loaded.back().rows() != params_[k].rows() || loaded.back().cols() != params_[k].cols())
            throw format_error("model tensor " + std::to_string(k) + " has the wrong shape");
    }
    params_ = std::move(loaded);
}

// ------------------------------------------------------------------- RNN ---

ElmanRnn::ElmanRnn(int hidden, std::size_t vocabulary, std::uint64_t seed) : SequenceModel(hidden, vocabulary)
{
    Rng rng(derive_seed(seed, {fnv1a("rnn.init")}));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    const auto h = static_cast<Eigen::Index>(hidden);
    const auto L = static_cast<Eigen::Index>(vocabulary);
    params_.push_back(init_uniform(rng, h, L, bound));
    params_.push_back(init_uniform(rng, h, h, bound));
    params_.push_back(init_uniform(rng, L, h, bound));
}

Eigen::MatrixXd ElmanRnn::hidden_states(std::span<const TokenId> tokens) const
{
    const auto& w_ih = params_[0];
    const auto& w_hh = params_[1];
    Eigen::MatrixXd hs(hidden_, static_cast<Eigen::Index>(tokens.size()));
    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden_);
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        const TokenId x = tokens[t];
        if (x < 0 || static_cast<std::size_t>(x) >= vocabulary_)
            throw vocabulary_error("token id " + std::to_string(x) + " outside vocabulary");
        Eigen::VectorXd a = w_hh * h;
        a += w_ih.col(x);
        h = a.array().tanh().matrix();
        hs.col(static_cast<Eigen::Index>(t)) = h;
    }
    return hs;
}

Eigen::MatrixXd ElmanRnn::logits(std::span<const TokenId> tokens) const
{
    return params_[2] * hidden_states(tokens);
}

LossAndGradient ElmanRnn::gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const
{
    check_sequence(tokens, mask);
    const std::size_t last = last_masked(mask);
    const auto& w_hh = params_[1];
    const auto& w_out = params_[2];
    // States up to position last - 1 are the only ones feeding the loss.
    const Eigen::MatrixXd hs = hidden_states(tokens.first(last));

    LossAndGradient out;
    out.gradient = zeros_like(params_);
    auto& g_ih = out.gradient[0];
    auto& g_hh = out.gradient[1];
    auto& g_out = out.gradient[2];

    Eigen::MatrixXd dh_direct = Eigen::MatrixXd::Zero(hidden_, static_cast<Eigen::Index>(last));
    Eigen::VectorXd dz;
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_));
    for (std::size_t t = 0; t <= last; ++t) {
        if (!mask[t]) continue;
        if (t == 0) {
            out.loss += cross_entropy(z0, tokens[t], dz);
            continue;
        }
        const auto s = static_cast<Eigen::Index>(t) - 1;
        out.loss += cross_entropy(w_out * hs.col(s), tokens[t], dz);
        g_out.noalias() += dz * hs.col(s).transpose();
        dh_direct.col(s).noalias() += w_out.transpose() * dz;
    }

    Eigen::VectorXd carry = Eigen::VectorXd::Zero(hidden_);
    for (auto s = static_cast<Eigen::Index>(last) - 1; s >= 0; --s) {
        const Eigen::VectorXd dh = dh_direct.col(s) + carry;
        const Eigen::VectorXd da = (dh.array() * (1.0 - hs.col(s).array().square())).matrix();
        g_ih.col(tokens[static_cast<std::size_t>(s)]) += da;
        if (s > 0) g_hh.noalias() += da * hs.col(s - 1).transpose();
        carry.noalias() = w_hh.transpose() * da;
    }
    return out;
}

std::pair<std::size_t, std::size_t> ElmanRnn::count_correct(std::span<const TaskSample* const> samples) const
{
    const auto& w_ih = params_[0];
    const auto& w_hh = params_[1];
    const auto& w_out = params_[2];
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(hidden_, static_cast<Eigen::Index>(samples.size()));
    Eigen::MatrixXd a(h.rows(), h.cols());
    return batched_count(
        samples,
        [&](const std::vector<TokenId>& xs) {
            a.noalias() = w_hh * h;
            for (std::size_t j = 0; j < xs.size(); ++j)
                if (xs[j] >= 0) a.col(static_cast<Eigen::Index>(j)) += w_ih.col(xs[j]);
            h = a.array().tanh().matrix();
        },
        [&] { return Eigen::MatrixXd(w_out * h); });
}

// ------------------------------------------------------------------ LSTM ---

Lstm::Lstm(int hidden, std::size_t vocabulary, std::uint64_t seed) : SequenceModel(hidden, vocabulary)
{
    Rng rng(derive_seed(seed, {fnv1a("lstm.init")}));
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    const auto h = static_cast<Eigen::Index>(hidden);
    const auto L = static_cast<Eigen::Index>(vocabulary);
    params_.push_back(init_uniform(rng, 4 * h, L, bound));
    params_.push_back(init_uniform(rng, 4 * h, h, bound));
    params_.push_back(init_uniform(rng, L, h, bound));
}

namespace {

struct LstmTrace {
    Eigen::MatrixXd i, f, g, o, c, h;  // each hidden x T
};

LstmTrace lstm_forward(const Parameters& p, int hidden, std::size_t vocabulary, std::span<const TokenId> tokens)
{
    const auto H = static_cast<Eigen::Index>(hidden);
    const auto T = static_cast<Eigen::Index>(tokens.size());
    LstmTrace tr;
    for (auto* m : {&tr.i, &tr.f, &tr.g, &tr.o, &tr.c, &tr.h}) m->resize(H, T);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H), c = Eigen::VectorXd::Zero(H);
    for (Eigen::Index t = 0; t < T; ++t) {
        const TokenId x = tokens[static_cast<std::size_t>(t)];
        if (x < 0 || static_cast<std::size_t>(x) >= vocabulary)
            throw vocabulary_error("token id " + std::to_string(x) + " outside vocabulary");
        Eigen::VectorXd z = p[1] * h;
        z += p[0].col(x);
        tr.i.col(t) = sigmoid(z.segment(0, H).array()).matrix();
        tr.f.col(t) = sigmoid(z.segment(H, H).array()).matrix();
        tr.g.col(t) = z.segment(2 * H, H).array().tanh().matrix();
        tr.o.col(t) = sigmoid(z.segment(3 * H, H).array()).matrix();
        c = (tr.f.col(t).array() * c.array() + tr.i.col(t).array() * tr.g.col(t).array()).matrix();
        h = (tr.o.col(t).array() * c.array().tanh()).matrix();
        tr.c.col(t) = c;
        tr.h.col(t) = h;
    }
    return tr;
}

}  // namespace

Lstm::States Lstm::states(std::span<const TokenId> tokens) const
{
    auto tr = lstm_forward(params_, hidden_, vocabulary_, tokens);
    return States{std::move(tr.h), std::move(tr.c)};
}

Eigen::MatrixXd Lstm::logits(std::span<const TokenId> tokens) const
{
    return params_[2] * lstm_forward(params_, hidden_, vocabulary_, tokens).h;
}

LossAndGradient Lstm::gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const
{
    check_sequence(tokens, mask);
    const std::size_t last = last_masked(mask);
    const auto H = static_cast<Eigen::Index>(hidden_);
    const auto& w_h = params_[1];
    const auto& w_out = params_[2];
    const LstmTrace tr = lstm_forward(params_, hidden_, vocabulary_, tokens.first(last));

    LossAndGradient out;
    out.gradient = zeros_like(params_);
    auto& g_x = out.gradient[0];
    auto& g_h = out.gradient[1];
    auto& g_out = out.gradient[2];

    Eigen::MatrixXd dh_direct = Eigen::MatrixXd::Zero(H, static_cast<Eigen::Index>(last));
    Eigen::VectorXd dz;
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocabulary_));
    for (std::size_t t = 0; t <= last; ++t) {
        if (!mask[t]) continue;
        if (t == 0) {
            out.loss += cross_entropy(z0, tokens[t], dz);
            continue;
        }
        const auto s = static_cast<Eigen::Index>(t) - 1;
        out.loss += cross_entropy(w_out * tr.h.col(s), tokens[t], dz);
        g_out.noalias() += dz * tr.h.col(s).transpose();
        dh_direct.col(s).noalias() += w_out.transpose() * dz;
    }

    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(H), dc_next = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd dgates(4 * H);
    for (auto s = static_cast<Eigen::Index>(last) - 1; s >= 0; --s) {
        const Eigen::ArrayXd i = tr.i.col(s), f = tr.f.col(s), g = tr.g.col(s), o = tr.o.col(s);
        const Eigen::ArrayXd tc = tr.c.col(s).array().tanh();
        const Eigen::ArrayXd c_prev = s > 0 ? Eigen::ArrayXd(tr.c.col(s - 1)) : Eigen::ArrayXd::Zero(H);
        const Eigen::ArrayXd dh = (dh_direct.col(s) + dh_next).array();
        const Eigen::ArrayXd dc = dh * o * (1.0 - tc.square()) + dc_next.array();
        dgates.segment(0, H) = (dc * g * i * (1.0 - i)).matrix();
        dgates.segment(H, H) = (dc * c_prev * f * (1.0 - f)).matrix();
        dgates.segment(2 * H, H) = (dc * i * (1.0 - g.square())).matrix();
        dgates.segment(3 * H, H) = (dh * tc * o * (1.0 - o)).matrix();
        dc_next = (dc * f).matrix();
        g_x.col(tokens[static_cast<std::size_t>(s)]) += dgates;
        if (s > 0) g_h.noalias() += dgates * tr.h.col(s - 1).transpose();
        dh_next.noalias() = w_h.transpose() * dgates;
    }
    return out;
}

std::pair<std::size_t, std::size_t> Lstm::count_correct(std::span<const TaskSample* const> samples) const
{
    const auto& w_x = params_[0];
    const auto& w_h = params_[1];
    const auto& w_out = params_[2];
    const auto H = static_cast<Eigen::Index>(hidden_);
    const auto N = static_cast<Eigen::Index>(samples.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, N), c = Eigen::MatrixXd::Zero(H, N), z(4 * H, N);
    return batched_count(
        samples,
        [&](const std::vector<TokenId>& xs) {
            z.noalias() = w_h * h;
            for (std::size_t j = 0; j < xs.size(); ++j)
                if (xs[j] >= 0) z.col(static_cast<Eigen::Index>(j)) += w_x.col(xs[j]);
            const Eigen::ArrayXXd i = 1.0 / (1.0 + (-z.topRows(H).array()).exp());
            const Eigen::ArrayXXd f = 1.0 / (1.0 + (-z.middleRows(H, H).array()).exp());
            const Eigen::ArrayXXd g = z.middleRows(2 * H, H).array().tanh();
            const Eigen::ArrayXXd o = 1.0 / (1.0 + (-z.bottomRows(H).array()).exp());
            c = (f * c.array() + i * g).matrix();
            h = (o * c.array().tanh()).matrix();
        },
        [&] { return Eigen::MatrixXd(w_out * h); });
}

std::unique_ptr<SequenceModel> make_model(const std::string& name, std::size_t vocabulary, std::uint64_t seed,
                                          std::int64_t target_parameters)
{
    const auto L = static_cast<std::int64_t>(vocabulary);
    const std::int64_t target = target_parameters < 0 ? 1800 * L : target_parameters;
    if (name == "rnn") return std::make_unique<ElmanRnn>(match_hidden_size(L, target), vocabulary, seed);
    if (name == "lstm") return std::make_unique<Lstm>(match_lstm_hidden_size(L, target), vocabulary, seed);
    throw config_error("unknown baseline model '" + name + "' (expected rnn or lstm)");
}

// ------------------------------------------------------------------ Adam ---

Adam::Adam(const Parameters& shapes, AdamConfig config) : config_(config), m_(zeros_like(shapes)), v_(zeros_like(shapes))
{
    if (!(config.learning_rate >= 0.0)) throw config_error("learning rate must be >= 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0))
        throw config_error("Adam betas must lie in [0, 1)");
    if (!(config.epsilon > 0.0)) throw config_error("Adam epsilon must be positive");
}

void Adam::step(Parameters& params, const Parameters& gradient)
{
    if (params.size() != m_.size() || gradient.size() != m_.size())
        throw shape_error("Adam parameter and gradient lists differ in length");
    for (std::size_t k = 0; k < m_.size(); ++k)
        if (params[k].rows() != m_[k].rows() || params[k].cols() != m_[k].cols() ||
            gradient[k].rows() != m_[k].rows() || gradient[k].cols() != m_[k].cols())
            throw shape_error("Adam tensor " + std::to_string(k) + " has the wrong shape");
    ++steps_;
    const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < m_.size(); ++k) {
        m_[k] = config_.beta1 * m_[k] + (1.0 - config_.beta1) * gradient[k];
        v_[k] = config_.beta2 * v_[k] + (1.0 - config_.beta2) * gradient[k].cwiseProduct(gradient[k]);
        params[k].array() -=
            config_.learning_rate * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + config_.epsilon);
    }
}

// -------------------------------------------------------------- training ---

double accuracy(const SequenceModel& model, std::span<const TaskSample* const> samples)
{
    const auto [correct, total] = model.count_correct(samples);
    if (total == 0) throw undefined_accuracy_error("no masked positions to score");
    return static_cast<double>(correct) / static_cast<double>(total);
}

TrainOutcome train_baseline(SequenceModel& model, std::span<const TaskSample* const> train,
                            std::span<const TaskSample* const> test, const TrainConfig& config,
                            const metric::Cadence& cadence)
{
    if (config.epochs < 0) throw config_error("epochs must be >= 0");
    TrainOutcome out;
    out.initial_accuracy = accuracy(model, test);
    Adam adam(model.parameters(), config.adam);
    Rng rng(config.shuffle_seed);
    std::vector<std::size_t> order(train.size());
    const std::int64_t final_step = static_cast<std::int64_t>(train.size()) * config.epochs;
    std::int64_t step = 0;
    for (int epoch = 0; epoch < config.epochs && !out.failed; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const TaskSample& s = *train[idx];
            if (s.masked_count() > 0) {
                auto lg = model.gradient(s.tokens, s.mask);
                if (!std::isfinite(lg.loss)) {
                    out.failed = true;
                    out.error = "non-finite loss at training step " + std::to_string(step + 1);
                    break;
                }
                adam.step(model.parameters(), lg.gradient);
            }
            ++step;
            if (cadence.due(step, final_step)) out.curve.push_back({step, accuracy(model, test)});
        }
    }
    out.train_sequences = step;
    return out;
}

}  // namespace wadebench::baseline
