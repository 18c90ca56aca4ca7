#pragma once

// Fully-trained recurrent baselines: Elman RNN and LSTM with hand-derived
// backpropagation through time and the Adam optimizer.
//
// Alignment matches the reservoir readout: the prediction for tokens[t] is
// read from the hidden state after tokens[0..t-1] (the zero state for t = 0).
// The training loss is the summed cross-entropy over masked positions.

#include "wadebench/corpus.hpp"
#include "wadebench/metric.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace wadebench::baseline {

using corpus::TokenId;
using corpus::TaskSample;

/// Parameter tensors in a fixed order (see each model).
using Parameters = std::vector<Eigen::MatrixXd>;

std::int64_t rnn_parameter_count(std::int64_t h, std::int64_t L);
std::int64_t lstm_parameter_count(std::int64_t h, std::int64_t L);

/// Nearest integer to the positive root of h^2 + 2hL = target. Throws
/// config_error when that is 0 (degenerate target).
int match_hidden_size(std::int64_t L, std::int64_t target);
/// Same for 4(h^2 + hL) + hL = target.
int match_lstm_hidden_size(std::int64_t L, std::int64_t target);

struct LossAndGradient {
    double loss = 0.0;
    Parameters gradient;
};

class SequenceModel {
public:
    virtual ~SequenceModel() = default;

    virtual std::string name() const = 0;
    int hidden_size() const { return hidden_; }
    std::size_t vocabulary_size() const { return vocabulary_; }

    Parameters& parameters() { return params_; }
    const Parameters& parameters() const { return params_; }
    std::int64_t parameter_count() const;

    /// L x T; column t holds the logits after tokens[0..t].
    virtual Eigen::MatrixXd logits(std::span<const TokenId> tokens) const = 0;

    /// Summed masked cross-entropy.
    double loss(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const;

    /// Exact gradient of `loss`. Throws undefined_accuracy_error when nothing is
    /// masked.
    virtual LossAndGradient gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const = 0;

    /// (correct, total) argmax predictions over the masked positions of all
    /// samples, evaluated in one batched pass.
    virtual std::pair<std::size_t, std::size_t> count_correct(std::span<const TaskSample* const> samples) const = 0;

    void save(std::ostream& out) const;
    /// Replaces the parameters; throws format_error on a shape mismatch.
    void load(std::istream& in);

protected:
    SequenceModel(int hidden, std::size_t vocabulary);
    void check_sequence(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const;

    int hidden_;
    std::size_t vocabulary_;
    Parameters params_;
};

/// h_t = tanh(W_ih x_t + W_hh h_{t-1}), logits = W_out h_t, no biases.
/// Parameters: {W_ih (h x L), W_hh (h x h), W_out (L x h)}.
class ElmanRnn final : public SequenceModel {
public:
    /// Weights uniform in (-1/sqrt(h), 1/sqrt(h)).
    ElmanRnn(int hidden, std::size_t vocabulary, std::uint64_t seed);

    std::string name() const override { return "rnn"; }

    /// h x T hidden states.
    Eigen::MatrixXd hidden_states(std::span<const TokenId> tokens) const;
    Eigen::MatrixXd logits(std::span<const TokenId> tokens) const override;
    LossAndGradient gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const override;
    std::pair<std::size_t, std::size_t> count_correct(std::span<const TaskSample* const> samples) const override;
};

/// Gates i, f, g, o stacked in that order:
///   z = W_x x_t + W_h h_{t-1};  c_t = f * c_{t-1} + i * g;  h_t = o * tanh(c_t)
/// with sigmoid i, f, o and tanh g. Parameters: {W_x (4h x L), W_h (4h x h),
/// W_out (L x h)}; no biases.
class Lstm final : public SequenceModel {
public:
    Lstm(int hidden, std::size_t vocabulary, std::uint64_t seed);

    std::string name() const override { return "lstm"; }

    struct States {
        Eigen::MatrixXd hidden;  // h x T
        Eigen::MatrixXd cell;    // h x T
    };
    States states(std::span<const TokenId> tokens) const;
    Eigen::MatrixXd logits(std::span<const TokenId> tokens) const override;
    LossAndGradient gradient(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask) const override;
    std::pair<std::size_t, std::size_t> count_correct(std::span<const TaskSample* const> samples) const override;
};

/// "rnn" or "lstm", sized for the default parity target 1800 * L.
std::unique_ptr<SequenceModel> make_model(const std::string& name, std::size_t vocabulary, std::uint64_t seed,
                                          std::int64_t target_parameters = -1);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    Adam(const Parameters& shapes, AdamConfig config = {});

    /// Bias-corrected update of `params` in place.
    void step(Parameters& params, const Parameters& gradient);

    std::int64_t steps() const { return steps_; }
    const Parameters& first_moment() const { return m_; }
    const Parameters& second_moment() const { return v_; }

private:
    AdamConfig config_;
    Parameters m_, v_;
    std::int64_t steps_ = 0;
};

struct TrainConfig {
    int epochs = 10;
    AdamConfig adam;
    std::uint64_t shuffle_seed = 0;
};

struct TrainOutcome {
    metric::AccuracyCurve curve;
    /// Test accuracy of the untrained model.
    double initial_accuracy = 0.0;
    std::int64_t train_sequences = 0;
    bool failed = false;
    std::string error;
};

/// Pooled masked accuracy over `samples`; throws undefined_accuracy_error if
/// none of them has a masked position.
double accuracy(const SequenceModel& model, std::span<const TaskSample* const> samples);

/// One Adam step per training sequence, reshuffled every epoch; test accuracy
/// recorded whenever the cadence is due. A non-finite loss stops training and
/// marks the outcome failed.
TrainOutcome train_baseline(SequenceModel& model, std::span<const TaskSample* const> train,
                            std::span<const TaskSample* const> test, const TrainConfig& config,
                            const metric::Cadence& cadence);

}  // namespace wadebench::baseline
