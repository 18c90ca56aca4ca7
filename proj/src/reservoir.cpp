#include "wadebench/reservoir.hpp"

#include "wadebench/errors.hpp"
#include "wadebench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace wadebench::reservoir {

namespace {

void check_mask(std::span<const TokenId> tokens, std::span<const std::uint8_t> mask)
{
    if (tokens.size() != mask.size())
        throw shape_error("mask length " + std::to_string(mask.size()) + " does not match sequence length " +
                          std::to_string(tokens.size()));
}

std::size_t masked_total(std::span<const std::uint8_t> mask)
{
    return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; }));
}

void check_vocabulary_size(std::size_t L)
{
    if (L < 1) throw config_error("vocabulary size must be >= 1");
}

// Bit-packed grid: cell i lives in bit (i % 64) of word (i / 64); bits at and
// beyond n in the last word are kept zero.
class PackedGrid {
public:
    explicit PackedGrid(int n) : n_(n), words_(static_cast<std::size_t>((n + 63) / 64), 0)
    {
        const int tail = n % 64;
        tail_mask_ = tail == 0 ? ~0ULL : ((1ULL << tail) - 1);
    }

    int size() const { return n_; }

    static PackedGrid from_grid(const Grid& g)
    {
        PackedGrid p(static_cast<int>(g.size()));
        for (std::size_t i = 0; i < g.size(); ++i)
            if (g[i]) p.words_[i / 64] |= 1ULL << (i % 64);
        return p;
    }

    Grid to_grid() const
    {
        Grid g(static_cast<std::size_t>(n_));
        for (int i = 0; i < n_; ++i) g[static_cast<std::size_t>(i)] = bit(i);
        return g;
    }

    std::uint8_t bit(int i) const
    {
        return static_cast<std::uint8_t>((words_[static_cast<std::size_t>(i) / 64] >> (i % 64)) & 1ULL);
    }

    void flip(int i) { words_[static_cast<std::size_t>(i) / 64] ^= 1ULL << (i % 64); }

    void write_features(double* out) const
    {
        for (int i = 0; i < n_; ++i) out[i] = static_cast<double>(bit(i));
    }

    /// One update into `next` (which must have the same size).
    void step(const RuleTable& table, PackedGrid& next, PackedGrid& left, PackedGrid& right) const
    {
        const std::size_t nw = words_.size();
        // left[i] = s[i - 1], right[i] = s[i + 1], circularly.
        std::uint64_t carry = bit(n_ - 1);
        for (std::size_t w = 0; w < nw; ++w) {
            const std::uint64_t x = words_[w];
            left.words_[w] = (x << 1) | carry;
            carry = x >> 63;
        }
        left.words_[nw - 1] &= tail_mask_;
        for (std::size_t w = 0; w < nw; ++w) {
            const std::uint64_t hi = w + 1 < nw ? words_[w + 1] << 63 : 0;
            right.words_[w] = (words_[w] >> 1) | hi;
        }
        if (bit(0)) right.words_[static_cast<std::size_t>(n_ - 1) / 64] |= 1ULL << ((n_ - 1) % 64);

        for (std::size_t w = 0; w < nw; ++w) {
            const std::uint64_t l = left.words_[w], s = words_[w], r = right.words_[w];
            std::uint64_t out = 0;
            for (int k = 0; k < 8; ++k) {
                if (!table[static_cast<std::size_t>(k)]) continue;
                out |= ((k & 4) ? l : ~l) & ((k & 2) ? s : ~s) & ((k & 1) ? r : ~r);
            }
            next.words_[w] = out;
        }
        next.words_[nw - 1] &= tail_mask_;
    }

private:
    int n_;
    std::vector<std::uint64_t> words_;
    std::uint64_t tail_mask_;
};

// Scratch buffers for running the CA over one sequence.
struct CaRunner {
    CaRunner(const RuleTable& table, int n, int expansion)
        : table(table), expansion(expansion), state(n), next(n), left(n), right(n)
    {
    }

    // Injects, then writes `expansion` successive grids into `feature` (may be
    // null when the feature is not needed).
    void advance(const std::vector<int>& cells, double* feature)
    {
        for (int c : cells) state.flip(c);
        for (int k = 0; k < expansion; ++k) {
            state.step(table, next, left, right);
            std::swap(state, next);
            if (feature) state.write_features(feature + static_cast<std::ptrdiff_t>(k) * state.size());
        }
    }

    const RuleTable& table;
    int expansion;
    PackedGrid state, next, left, right;
};

std::uint64_t binomial_saturating(std::uint64_t n, std::uint64_t k, std::uint64_t cap)
{
    if (k > n) return 0;
    k = std::min(k, n - k);
    // Multiplicative formula; intermediate values stay exact because
    // C(n, i) * (n - i) is divisible by (i + 1). Stop once above the cap.
    std::uint64_t c = 1;
    for (std::uint64_t i = 0; i < k; ++i) {
        const unsigned __int128 v = static_cast<unsigned __int128>(c) * (n - i) / (i + 1);
        if (v > cap) return cap + 1;
        c = static_cast<std::uint64_t>(v);
    }
    return c;
}

}  // namespace

// ------------------------------------------------------------------- ESN ---

void EsnConfig::validate() const
{
    if (state_size < 1) throw config_error("esn state size must be >= 1");
    if (nnz_per_row < 1 || nnz_per_row > state_size)
        throw config_error("esn nonzeros per row must lie in [1, state size]");
    if (!(leak >= 0.0 && leak <= 1.0)) throw config_error("esn leak must lie in [0, 1]");
    if (!(spectral_radius >= 0.0) || !std::isfinite(spectral_radius))
        throw config_error("esn spectral radius must be finite and >= 0");
}

KeyValueConfig EsnConfig::to_config() const
{
    KeyValueConfig c;
    c.set("esn.K", std::to_string(state_size));
    c.set("esn.nnz", std::to_string(nnz_per_row));
    c.set("esn.leak", format_double(leak));
    c.set("esn.spectral_radius", format_double(spectral_radius));
    c.set("esn.seed", std::to_string(seed));
    return c;
}

EsnConfig EsnConfig::from_config(const KeyValueConfig& c, const std::string& prefix)
{
    EsnConfig e;
    e.state_size = static_cast<int>(c.get_int(prefix + "K", e.state_size));
    e.nnz_per_row = static_cast<int>(c.get_int(prefix + "nnz", e.nnz_per_row));
    e.leak = c.get_double(prefix + "leak", e.leak);
    e.spectral_radius = c.get_double(prefix + "spectral_radius", e.spectral_radius);
    e.seed = c.get_uint(prefix + "seed", e.seed);
    e.validate();
    return e;
}

EchoStateNetwork::EchoStateNetwork(const EsnConfig& config, std::size_t vocabulary_size)
    : config_(config), vocabulary_size_(vocabulary_size)
{
    config_.validate();
    check_vocabulary_size(vocabulary_size);
    const int K = config_.state_size;
    const auto L = static_cast<Eigen::Index>(vocabulary_size);

    Rng rng(derive_seed(config_.seed, {fnv1a("esn.recurrent")}));
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(K) * static_cast<std::size_t>(config_.nnz_per_row));
    for (int row = 0; row < K; ++row) {
        auto cols = rng.sample_without_replacement(K, config_.nnz_per_row);
        std::sort(cols.begin(), cols.end());
        for (int col : cols) triplets.emplace_back(row, col, rng.uniform(-1.0, 1.0));
    }
    w_.resize(K, K);
    w_.setFromTriplets(triplets.begin(), triplets.end());
    w_.makeCompressed();

    if (config_.spectral_radius > 0.0) {
        const double rho = estimate_spectral_radius(w_, derive_seed(config_.seed, {fnv1a("esn.power")}));
        if (rho > 0.0) w_ *= config_.spectral_radius / rho;
    }

    Rng in_rng(derive_seed(config_.seed, {fnv1a("esn.input")}));
    w_in_.resize(K, L);
    for (Eigen::Index j = 0; j < L; ++j)
        for (Eigen::Index i = 0; i < K; ++i) w_in_(i, j) = in_rng.uniform(-1.0, 1.0);
}

void EchoStateNetwork::check_token(TokenId token) const
{
    if (token < 0 || static_cast<std::size_t>(token) >= vocabulary_size_)
        throw vocabulary_error("token id " + std::to_string(token) + " outside vocabulary of size " +
                               std::to_string(vocabulary_size_));
}

Eigen::VectorXd EchoStateNetwork::step(const Eigen::VectorXd& state, const Eigen::VectorXd& input) const
{
    if (state.size() != config_.state_size)
        throw shape_error("esn state has length " + std::to_string(state.size()) + ", expected " +
                          std::to_string(config_.state_size));
    if (static_cast<std::size_t>(input.size()) != vocabulary_size_)
        throw shape_error("esn input has length " + std::to_string(input.size()) + ", expected " +
                          std::to_string(vocabulary_size_));
    Eigen::VectorXd pre = w_ * state + w_in_ * input;
    const double lam = config_.leak;
    return (1.0 - lam) * state + lam * pre.array().tanh().matrix();
}

void EchoStateNetwork::step(Eigen::VectorXd& state, TokenId token) const
{
    check_token(token);
    Eigen::VectorXd pre = w_ * state;
    pre += w_in_.col(token);
    const double lam = config_.leak;
    if (lam == 1.0)
        state = pre.array().tanh().matrix();
    else
        state = (1.0 - lam) * state + lam * pre.array().tanh().matrix();
}

Eigen::MatrixXd EchoStateNetwork::run_sequence(std::span<const TokenId> tokens) const
{
    Eigen::MatrixXd out(config_.state_size, static_cast<Eigen::Index>(tokens.size()));
    Eigen::VectorXd state = zero_state();
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        step(state, tokens[t]);
        out.col(static_cast<Eigen::Index>(t)) = state;
    }
    return out;
}

Eigen::MatrixXd EchoStateNetwork::masked_features(std::span<const TokenId> tokens,
                                                  std::span<const std::uint8_t> mask) const
{
    check_mask(tokens, mask);
    Eigen::MatrixXd out(config_.state_size, static_cast<Eigen::Index>(masked_total(mask)));
    Eigen::VectorXd state = zero_state();
    Eigen::Index j = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (mask[t]) out.col(j++) = state;
        // The last token never feeds a prediction.
        if (t + 1 < tokens.size()) step(state, tokens[t]);
        else check_token(tokens[t]);
    }
    return out;
}

double estimate_spectral_radius(const EchoStateNetwork::SparseMatrix& w, std::uint64_t seed, int iterations)
{
    if (w.rows() != w.cols()) throw shape_error("spectral radius needs a square matrix");
    if (iterations < 2) throw config_error("power iteration needs at least 2 iterations");
    Rng rng(seed);
    Eigen::VectorXd v(w.rows());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform(-1.0, 1.0);
    v.normalize();
    // Complex dominant pairs make single-step growth oscillate; the mean log
    // growth over the second half converges to log |lambda_max|.
    const int burn_in = iterations / 2;
    double log_sum = 0.0;
    int counted = 0;
    for (int k = 0; k < iterations; ++k) {
        Eigen::VectorXd next = w * v;
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        if (k >= burn_in) {
            log_sum += std::log(norm);
            ++counted;
        }
        v = next / norm;
    }
    return std::exp(log_sum / counted);
}

// -------------------------------------------------------------------- CA ---

RuleTable rule_table(int rule)
{
    if (rule < 0 || rule > 255) throw config_error("rule must lie in 0..255, got " + std::to_string(rule));
    RuleTable t{};
    for (int k = 0; k < 8; ++k) t[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>((rule >> k) & 1);
    return t;
}

Grid ca_step(const Grid& state, const RuleTable& table)
{
    if (state.size() < 3) throw shape_error("CA grid needs at least 3 cells");
    const int n = static_cast<int>(state.size());
    PackedGrid s = PackedGrid::from_grid(state), next(n), left(n), right(n);
    s.step(table, next, left, right);
    return next.to_grid();
}

Grid ca_step(const Grid& state, int rule)
{
    return ca_step(state, rule_table(rule));
}

Grid inject(const Grid& projection, const Grid& state)
{
    if (projection.size() != state.size())
        throw shape_error("projection length " + std::to_string(projection.size()) + " does not match grid length " +
                          std::to_string(state.size()));
    Grid out(state.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        out[i] = static_cast<std::uint8_t>((projection[i] ^ state[i]) & 1);
    return out;
}

void CaConfig::validate() const
{
    if (rule < 0 || rule > 255) throw config_error("rule must lie in 0..255, got " + std::to_string(rule));
    if (grid_size < 3) throw config_error("CA grid size must be >= 3");
    if (expansion < 1) throw config_error("CA expansion must be >= 1");
    if (inject_width < 1 || inject_width > grid_size) throw config_error("injection width must lie in [1, grid size]");
}

KeyValueConfig CaConfig::to_config() const
{
    KeyValueConfig c;
    c.set("ca.rule", std::to_string(rule));
    c.set("ca.n", std::to_string(grid_size));
    c.set("ca.r_expand", std::to_string(expansion));
    c.set("ca.d_inject", std::to_string(inject_width));
    c.set("ca.seed", std::to_string(seed));
    return c;
}

CaConfig CaConfig::from_config(const KeyValueConfig& c, const std::string& prefix)
{
    CaConfig e;
    e.rule = static_cast<int>(c.get_int(prefix + "rule", e.rule));
    e.grid_size = static_cast<int>(c.get_int(prefix + "n", e.grid_size));
    e.expansion = static_cast<int>(c.get_int(prefix + "r_expand", e.expansion));
    e.inject_width = static_cast<int>(c.get_int(prefix + "d_inject", e.inject_width));
    e.seed = c.get_uint(prefix + "seed", e.seed);
    e.validate();
    return e;
}

InjectionMap::InjectionMap(std::size_t vocabulary_size, int grid_size, int width, std::uint64_t seed)
    : grid_size_(grid_size)
{
    check_vocabulary_size(vocabulary_size);
    if (grid_size < 1) throw config_error("grid size must be >= 1");
    if (width < 1 || width > grid_size) throw config_error("injection width must lie in [1, grid size]");
    const auto n = static_cast<std::uint64_t>(grid_size);
    const auto L = static_cast<std::uint64_t>(vocabulary_size);
    if (binomial_saturating(n, static_cast<std::uint64_t>(width), L) < L)
        throw config_error("a grid of " + std::to_string(grid_size) + " cells has fewer than " + std::to_string(L) +
                           " distinct " + std::to_string(width) + "-cell patterns");

    Rng rng(derive_seed(seed, {fnv1a("ca.inject")}));
    std::set<std::vector<int>> used;
    cells_.reserve(vocabulary_size);
    while (cells_.size() < vocabulary_size) {
        auto cells = rng.sample_without_replacement(grid_size, width);
        std::sort(cells.begin(), cells.end());
        if (used.insert(cells).second) cells_.push_back(std::move(cells));
    }
}

const std::vector<int>& InjectionMap::cells(TokenId token) const
{
    if (token < 0 || static_cast<std::size_t>(token) >= cells_.size())
        throw vocabulary_error("token id " + std::to_string(token) + " outside vocabulary of size " +
                               std::to_string(cells_.size()));
    return cells_[static_cast<std::size_t>(token)];
}

Grid InjectionMap::projection(TokenId token) const
{
    Grid p(static_cast<std::size_t>(grid_size_), 0);
    for (int c : cells(token)) p[static_cast<std::size_t>(c)] = 1;
    return p;
}

Grid InjectionMap::projection(const Eigen::VectorXd& one_hot) const
{
    if (static_cast<std::size_t>(one_hot.size()) != cells_.size())
        throw shape_error("input has length " + std::to_string(one_hot.size()) + ", expected " +
                          std::to_string(cells_.size()));
    Eigen::Index hot = -1;
    for (Eigen::Index i = 0; i < one_hot.size(); ++i) {
        if (one_hot[i] == 0.0) continue;
        if (one_hot[i] != 1.0 || hot >= 0) throw shape_error("CA input must be a one-hot vector");
        hot = i;
    }
    if (hot < 0) throw shape_error("CA input must be a one-hot vector");
    return projection(static_cast<TokenId>(hot));
}

ReservoirCA::ReservoirCA(const CaConfig& config, std::size_t vocabulary_size)
    : config_(config),
      table_(rule_table(config.rule)),
      injection_((config.validate(), vocabulary_size), config.grid_size, config.inject_width, config.seed)
{
}

Eigen::VectorXd ReservoirCA::advance(Grid& state, const Grid& projection) const
{
    if (state.size() != static_cast<std::size_t>(config_.grid_size))
        throw shape_error("CA state has length " + std::to_string(state.size()) + ", expected " +
                          std::to_string(config_.grid_size));
    Eigen::VectorXd feature(config_.feature_size());
    Grid s = inject(projection, state);
    for (int k = 0; k < config_.expansion; ++k) {
        s = ca_step(s, table_);
        for (int i = 0; i < config_.grid_size; ++i)
            feature[k * config_.grid_size + i] = static_cast<double>(s[static_cast<std::size_t>(i)]);
    }
    state = std::move(s);
    return feature;
}

Eigen::VectorXd ReservoirCA::step(Grid& state, TokenId token) const
{
    return advance(state, injection_.projection(token));
}

Eigen::VectorXd ReservoirCA::step(Grid& state, const Eigen::VectorXd& one_hot) const
{
    return advance(state, injection_.projection(one_hot));
}

Eigen::MatrixXd ReservoirCA::run_sequence(std::span<const TokenId> tokens) const
{
    Eigen::MatrixXd out(config_.feature_size(), static_cast<Eigen::Index>(tokens.size()));
    CaRunner runner(table_, config_.grid_size, config_.expansion);
    for (std::size_t t = 0; t < tokens.size(); ++t)
        runner.advance(injection_.cells(tokens[t]), out.col(static_cast<Eigen::Index>(t)).data());
    return out;
}

Eigen::MatrixXd ReservoirCA::masked_features(std::span<const TokenId> tokens,
                                             std::span<const std::uint8_t> mask) const
{
    check_mask(tokens, mask);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(config_.feature_size(), static_cast<Eigen::Index>(masked_total(mask)));
    CaRunner runner(table_, config_.grid_size, config_.expansion);
    Eigen::Index j = 0;
    // Column j receives the feature produced by tokens[t_j - 1]; a mask at
    // t = 0 keeps the zero column (the initial state).
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (mask[t] && t == 0) ++j;
        const bool wanted = t + 1 < tokens.size() && mask[t + 1];
        if (t + 1 < tokens.size())
            runner.advance(injection_.cells(tokens[t]), wanted ? out.col(j).data() : nullptr);
        else
            (void)injection_.cells(tokens[t]);
        if (wanted) ++j;
    }
    return out;
}

}  // namespace wadebench::reservoir
