#pragma once

// Frozen-dynamics feature generators: a sparse echo-state network and a
// reservoir elementary cellular automaton (ReCA).

#include "wadebench/config.hpp"
#include "wadebench/corpus.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wadebench::reservoir {

using corpus::TokenId;

/// Common interface for the harness: frozen weights, per-sequence state
/// starting from zero.
class Reservoir {
public:
    virtual ~Reservoir() = default;

    virtual std::size_t feature_size() const = 0;
    virtual std::size_t vocabulary_size() const = 0;

    /// Column t is the feature after consuming tokens[0..t]. State starts at
    /// zero for every call. Throws vocabulary_error on an unknown token id.
    virtual Eigen::MatrixXd run_sequence(std::span<const TokenId> tokens) const = 0;

    /// The features that predict the masked positions: column j holds the
    /// feature after tokens[0..t_j - 1] for the j-th masked position t_j.
    virtual Eigen::MatrixXd masked_features(std::span<const TokenId> tokens,
                                            std::span<const std::uint8_t> mask) const = 0;

    /// Provenance key-value pairs.
    virtual KeyValueConfig config() const = 0;
    virtual std::string name() const = 0;
};

// ------------------------------------------------------------------- ESN ---

struct EsnConfig {
    int state_size = 1800;
    int nnz_per_row = 10;
    /// r <- (1 - leak) r + leak tanh(W r + W_in x)
    double leak = 1.0;
    /// Rescale W to this spectral radius; 0 leaves the raw uniform weights.
    double spectral_radius = 0.0;
    std::uint64_t seed = 0;

    void validate() const;
    KeyValueConfig to_config() const;
    static EsnConfig from_config(const KeyValueConfig& c, const std::string& prefix = "esn.");
};

class EchoStateNetwork final : public Reservoir {
public:
    using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    EchoStateNetwork(const EsnConfig& config, std::size_t vocabulary_size);

    std::size_t feature_size() const override { return static_cast<std::size_t>(config_.state_size); }
    std::size_t vocabulary_size() const override { return vocabulary_size_; }

    Eigen::VectorXd zero_state() const { return Eigen::VectorXd::Zero(config_.state_size); }

    /// One update with an arbitrary input vector of length L.
    Eigen::VectorXd step(const Eigen::VectorXd& state, const Eigen::VectorXd& input) const;
    /// In-place update with a token (the one-hot input column of W_in).
    void step(Eigen::VectorXd& state, TokenId token) const;

    Eigen::MatrixXd run_sequence(std::span<const TokenId> tokens) const override;
    Eigen::MatrixXd masked_features(std::span<const TokenId> tokens,
                                    std::span<const std::uint8_t> mask) const override;

    const SparseMatrix& recurrent_weights() const { return w_; }
    const Eigen::MatrixXd& input_weights() const { return w_in_; }
    const EsnConfig& settings() const { return config_; }

    KeyValueConfig config() const override { return config_.to_config(); }
    std::string name() const override { return "esn"; }

private:
    void check_token(TokenId token) const;

    EsnConfig config_;
    std::size_t vocabulary_size_;
    SparseMatrix w_;
    Eigen::MatrixXd w_in_;  // K x L
};

/// Estimated spectral radius of a sparse square matrix (power iteration on
/// the growth rate of ||W^k v||).
double estimate_spectral_radius(const EchoStateNetwork::SparseMatrix& w, std::uint64_t seed, int iterations = 300);

// -------------------------------------------------------------------- CA ---

/// Output bit for each neighborhood value (left << 2 | self << 1 | right).
using RuleTable = std::array<std::uint8_t, 8>;
using Grid = std::vector<std::uint8_t>;

/// Throws config_error unless 0 <= rule <= 255.
RuleTable rule_table(int rule);

/// One synchronous update with circular boundary. Throws shape_error if the
/// grid has fewer than 3 cells.
Grid ca_step(const Grid& state, const RuleTable& table);
Grid ca_step(const Grid& state, int rule);

/// Elementwise XOR. Throws shape_error on a length mismatch.
Grid inject(const Grid& projection, const Grid& state);

struct CaConfig {
    int rule = 110;
    int grid_size = 450;
    /// Number of consecutive CA states concatenated into one feature vector.
    int expansion = 4;
    /// Cells flipped per input token.
    int inject_width = 4;
    std::uint64_t seed = 0;

    int feature_size() const { return grid_size * expansion; }
    void validate() const;
    KeyValueConfig to_config() const;
    static CaConfig from_config(const KeyValueConfig& c, const std::string& prefix = "ca.");
};

/// Binary L x n projection; each token sets `width` distinct cells and no two
/// tokens share the same cell set.
class InjectionMap {
public:
    InjectionMap(std::size_t vocabulary_size, int grid_size, int width, std::uint64_t seed);

    std::size_t vocabulary_size() const { return cells_.size(); }
    int grid_size() const { return grid_size_; }

    const std::vector<int>& cells(TokenId token) const;
    /// p = P x for a token.
    Grid projection(TokenId token) const;
    /// p = P x for a one-hot vector; throws shape_error otherwise.
    Grid projection(const Eigen::VectorXd& one_hot) const;

private:
    int grid_size_;
    std::vector<std::vector<int>> cells_;
};

class ReservoirCA final : public Reservoir {
public:
    ReservoirCA(const CaConfig& config, std::size_t vocabulary_size);

    std::size_t feature_size() const override { return static_cast<std::size_t>(config_.feature_size()); }
    std::size_t vocabulary_size() const override { return injection_.vocabulary_size(); }

    Grid zero_state() const { return Grid(static_cast<std::size_t>(config_.grid_size), 0); }

    /// s' = inject(P x, s), then `expansion` CA updates; the feature is the
    /// concatenation of those states and `state` becomes the last one.
    Eigen::VectorXd step(Grid& state, TokenId token) const;
    Eigen::VectorXd step(Grid& state, const Eigen::VectorXd& one_hot) const;

    Eigen::MatrixXd run_sequence(std::span<const TokenId> tokens) const override;
    Eigen::MatrixXd masked_features(std::span<const TokenId> tokens,
                                    std::span<const std::uint8_t> mask) const override;

    const InjectionMap& injection() const { return injection_; }
    const RuleTable& table() const { return table_; }
    const CaConfig& settings() const { return config_; }

    KeyValueConfig config() const override { return config_.to_config(); }
    std::string name() const override { return "reca:" + std::to_string(config_.rule); }

private:
    Eigen::VectorXd advance(Grid& state, const Grid& projection) const;

    CaConfig config_;
    RuleTable table_;
    InjectionMap injection_;
};

}  // namespace wadebench::reservoir
