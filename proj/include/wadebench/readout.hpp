#pragma once

// Linear softmax decoder trained online on reservoir features.

#include "wadebench/corpus.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>

namespace wadebench::readout {

using corpus::TokenId;

struct ReadoutConfig {
    double learning_rate = 1e-3;
    double weight_decay = 1e-3;
};

struct TrainEvent {
    std::int64_t step = 0;
    /// Cross-entropy before the update.
    double loss = 0.0;
};

/// Numerically stable softmax.
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

/// W_out is K x L and zero-initialized; logits = W_out^T f. No bias.
class LinearReadout {
public:
    LinearReadout(std::size_t feature_size, std::size_t vocabulary_size, ReadoutConfig config = {});

    std::size_t feature_size() const { return static_cast<std::size_t>(weights_.rows()); }
    std::size_t vocabulary_size() const { return static_cast<std::size_t>(weights_.cols()); }
    const ReadoutConfig& settings() const { return config_; }

    const Eigen::MatrixXd& weights() const { return weights_; }
    /// Throws shape_error on a shape mismatch.
    void set_weights(const Eigen::MatrixXd& weights);

    Eigen::VectorXd logits(const Eigen::VectorXd& feature) const;
    /// Probability vector over the vocabulary.
    Eigen::VectorXd predict(const Eigen::VectorXd& feature) const;
    /// Argmax of the logits; ties go to the lower token id.
    TokenId predict_token(const Eigen::VectorXd& feature) const;

    double loss(const Eigen::VectorXd& feature, TokenId target) const;
    /// Gradient of the cross-entropy (without weight decay) w.r.t. W_out.
    Eigen::MatrixXd gradient(const Eigen::VectorXd& feature, TokenId target) const;

    /// W_out <- W_out - lr (grad + wd W_out). Throws vocabulary_error on an
    /// out-of-range target.
    TrainEvent sgd_update(const Eigen::VectorXd& feature, TokenId target);

    /// One update per column, in order. Returns the summed pre-update loss.
    double train(const Eigen::MatrixXd& features, std::span<const TokenId> targets);

    std::int64_t updates() const { return updates_; }

    /// Text dump: "#wadebench-matrix 1", then "rows cols", then one row per line.
    void save(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;
    static LinearReadout load(std::istream& in, ReadoutConfig config = {});
    static LinearReadout load(const std::filesystem::path& path, ReadoutConfig config = {});

private:
    void check_feature(const Eigen::VectorXd& feature) const;
    void check_target(TokenId target) const;

    ReadoutConfig config_;
    Eigen::MatrixXd weights_;
    std::int64_t updates_ = 0;
};

/// Number of columns whose argmax prediction equals the target.
std::size_t count_correct(const LinearReadout& model, const Eigen::MatrixXd& features,
                          std::span<const TokenId> targets);

/// Accuracy over the masked positions of one sequence. `features` is the
/// per-position output of a reservoir (column t after tokens[0..t]); position
/// t is predicted from column t - 1 (the zero state for t = 0). Throws
/// undefined_accuracy_error if nothing is masked.
double masked_accuracy(const LinearReadout& model, const Eigen::MatrixXd& features,
                       std::span<const TokenId> tokens, std::span<const std::uint8_t> mask);

/// Dense matrix text format shared with the baseline checkpoints.
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in);

}  // namespace wadebench::readout
