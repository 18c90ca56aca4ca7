#include "wadebench/errors.hpp"
#include "wadebench/reservoir.hpp"
#include "wadebench/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace wadebench;
using namespace wadebench::reservoir;

namespace {

Grid random_grid(Rng& rng, std::size_t n)
{
    Grid g(n);
    for (auto& c : g) c = static_cast<std::uint8_t>(rng.below(2));
    return g;
}

std::vector<corpus::TokenId> random_tokens(Rng& rng, int length, int vocabulary)
{
    std::vector<corpus::TokenId> t(static_cast<std::size_t>(length));
    for (auto& x : t) x = static_cast<corpus::TokenId>(rng.below(static_cast<std::uint64_t>(vocabulary)));
    return t;
}

// Circular distance between cells i and j on a ring of n.
int ring_distance(int i, int j, int n)
{
    const int d = std::abs(i - j);
    return std::min(d, n - d);
}

}  // namespace

// ------------------------------------------------------------------- ESN ---

TEST(Esn, RecurrentMatrixHasFixedRowDegree)
{
    const EchoStateNetwork esn(EsnConfig{}, 2);
    const auto& w = esn.recurrent_weights();
    EXPECT_EQ(w.rows(), 1800);
    EXPECT_EQ(w.nonZeros(), 18000);
    for (Eigen::Index r = 0; r < w.outerSize(); ++r) {
        int count = 0;
        for (EchoStateNetwork::SparseMatrix::InnerIterator it(w, r); it; ++it) {
            ++count;
            EXPECT_GE(it.value(), -1.0);
            EXPECT_LE(it.value(), 1.0);
        }
        EXPECT_EQ(count, 10);
    }
    EXPECT_EQ(esn.input_weights().rows(), 1800);
    EXPECT_EQ(esn.input_weights().cols(), 2);
    EXPECT_LE(esn.input_weights().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Esn, WeightsAreAFunctionOfSeed)
{
    EsnConfig c;
    c.state_size = 50;
    c.nnz_per_row = 5;
    c.seed = 3;
    const EchoStateNetwork a(c, 4), b(c, 4);
    c.seed = 4;
    const EchoStateNetwork d(c, 4);
    EXPECT_TRUE(a.recurrent_weights().isApprox(b.recurrent_weights(), 0.0));
    EXPECT_EQ(a.input_weights(), b.input_weights());
    EXPECT_NE(a.input_weights(), d.input_weights());
}

TEST(Esn, TwoUnitStepMatchesHandComputation)
{
    EsnConfig c;
    c.state_size = 2;
    c.nnz_per_row = 2;
    c.leak = 0.7;
    c.seed = 9;
    const EchoStateNetwork esn(c, 3);
    const Eigen::MatrixXd w = Eigen::MatrixXd(esn.recurrent_weights());
    const Eigen::MatrixXd& win = esn.input_weights();

    Eigen::VectorXd r(2);
    r << 0.25, -0.5;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    x[1] = 1.0;
    Eigen::VectorXd expected(2);
    for (int i = 0; i < 2; ++i) {
        const double pre = w(i, 0) * r[0] + w(i, 1) * r[1] + win(i, 1);
        expected[i] = 0.3 * r[i] + 0.7 * std::tanh(pre);
    }
    const Eigen::VectorXd got = esn.step(r, x);
    EXPECT_NEAR(got[0], expected[0], 1e-15);
    EXPECT_NEAR(got[1], expected[1], 1e-15);

    Eigen::VectorXd in_place = r;
    esn.step(in_place, 1);
    EXPECT_NEAR((in_place - expected).cwiseAbs().maxCoeff(), 0.0, 1e-15);
}

TEST(Esn, SingleUnitReservoir)
{
    EsnConfig c;
    c.state_size = 1;
    c.nnz_per_row = 1;
    const EchoStateNetwork esn(c, 2);
    const double w = esn.recurrent_weights().coeff(0, 0);
    const double u = esn.input_weights()(0, 0);
    Eigen::VectorXd r = esn.zero_state();
    esn.step(r, 0);
    EXPECT_DOUBLE_EQ(r[0], std::tanh(u));
    esn.step(r, 0);
    EXPECT_DOUBLE_EQ(r[0], std::tanh(w * std::tanh(u) + u));
}

TEST(Esn, ZeroInputKeepsZeroState)
{
    EsnConfig c;
    c.state_size = 100;
    const EchoStateNetwork esn(c, 3);
    const Eigen::VectorXd r = esn.step(esn.zero_state(), Eigen::VectorXd::Zero(3));
    EXPECT_EQ(r.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Esn, ZeroLeakIsIdentity)
{
    EsnConfig c;
    c.state_size = 40;
    c.leak = 0.0;
    const EchoStateNetwork esn(c, 3);
    Rng rng(1);
    Eigen::VectorXd r(40);
    for (auto& v : r) v = rng.uniform(-1, 1);
    EXPECT_EQ(esn.step(r, corpus::encode_one_hot(2, 3)), r);
}

TEST(Esn, StatesStayInsideUnitCube)
{
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        EsnConfig c;
        c.state_size = 60;
        c.leak = rng.uniform(0.05, 1.0);
        c.seed = rng.next();
        const EchoStateNetwork esn(c, 5);
        const auto f = esn.run_sequence(random_tokens(rng, 200, 5));
        EXPECT_LE(f.cwiseAbs().maxCoeff(), 1.0);
    }
}

TEST(Esn, RunSequenceAndMaskedFeaturesAlign)
{
    EsnConfig c;
    c.state_size = 30;
    const EchoStateNetwork esn(c, 4);
    Rng rng(3);
    const auto tokens = random_tokens(rng, 25, 4);
    const auto f = esn.run_sequence(tokens);
    ASSERT_EQ(f.cols(), 25);

    Eigen::VectorXd r = esn.zero_state();
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        esn.step(r, tokens[t]);
        EXPECT_EQ(f.col(static_cast<Eigen::Index>(t)), r);
    }

    std::vector<std::uint8_t> mask(25, 0);
    mask[0] = mask[7] = mask[24] = 1;
    const auto m = esn.masked_features(tokens, mask);
    ASSERT_EQ(m.cols(), 3);
    EXPECT_EQ(m.col(0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(m.col(1), f.col(6));
    EXPECT_EQ(m.col(2), f.col(23));
}

TEST(Esn, SpectralRescaleHitsTarget)
{
    EsnConfig c;
    c.state_size = 400;
    c.spectral_radius = 0.9;
    const EchoStateNetwork esn(c, 2);
    EXPECT_NEAR(estimate_spectral_radius(esn.recurrent_weights(), 77), 0.9, 0.05);
}

TEST(Esn, InvalidConfigurationsThrow)
{
    EsnConfig c;
    c.nnz_per_row = 0;
    EXPECT_THROW(EchoStateNetwork(c, 2), config_error);
    c = {};
    c.leak = 1.5;
    EXPECT_THROW(EchoStateNetwork(c, 2), config_error);
    c = {};
    c.state_size = 10;
    const EchoStateNetwork esn(c, 2);
    Eigen::VectorXd r = esn.zero_state();
    EXPECT_THROW(esn.step(r, 2), vocabulary_error);
    EXPECT_THROW(esn.step(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(2)), shape_error);
}

TEST(Esn, ConfigRoundTrip)
{
    EsnConfig c;
    c.state_size = 7;
    c.nnz_per_row = 3;
    c.leak = 0.3;
    c.seed = 12345678901234ULL;
    const auto back = EsnConfig::from_config(c.to_config());
    EXPECT_EQ(back.state_size, 7);
    EXPECT_EQ(back.leak, 0.3);
    EXPECT_EQ(back.seed, c.seed);
}

// ------------------------------------------------------------------- CA ---

TEST(Ca, RuleTablesAreBinaryExpansions)
{
    int checked = 0;
    for (int rule = 0; rule < 256; ++rule) {
        const auto t = rule_table(rule);
        int rebuilt = 0;
        for (int k = 0; k < 8; ++k) {
            ASSERT_LE(t[static_cast<std::size_t>(k)], 1);
            rebuilt |= t[static_cast<std::size_t>(k)] << k;
            ++checked;
        }
        EXPECT_EQ(rebuilt, rule);
    }
    EXPECT_EQ(checked, 2048);
    EXPECT_THROW(rule_table(256), config_error);
    EXPECT_THROW(rule_table(-1), config_error);
}

TEST(Ca, KnownRules)
{
    const Grid g{0, 0, 0, 1, 0, 0, 0};
    EXPECT_EQ(ca_step(g, 0), Grid(7, 0));
    // Rule 1 turns on only for the 000 neighbourhood.
    EXPECT_EQ(ca_step(g, 1), (Grid{1, 1, 0, 0, 0, 1, 1}));
    // Rule 90 is left XOR right.
    EXPECT_EQ(ca_step(g, 90), (Grid{0, 0, 1, 0, 1, 0, 0}));
    // Rule 110: 001 -> 1, 010 -> 1, 100 -> 0.
    EXPECT_EQ(ca_step(g, 110), (Grid{0, 0, 1, 1, 0, 0, 0}));
    // Circular boundary: a cell at the edge sees the other edge.
    EXPECT_EQ(ca_step(Grid{1, 0, 0, 0, 0}, 90), (Grid{0, 1, 0, 0, 1}));
}

TEST(Ca, MatchesPerCellReferenceForEveryRule)
{
    Rng rng(5);
    for (int rule = 0; rule < 256; ++rule)
        for (int i = 0; i < 100; ++i) {
            const Grid g = random_grid(rng, 12);
            ASSERT_EQ(ca_step(g, rule), oracles::ca_reference(g, rule)) << "rule " << rule;
        }
}

TEST(Ca, MatchesReferenceAcrossWordBoundaries)
{
    Rng rng(6);
    for (std::size_t n : {3u, 63u, 64u, 65u, 127u, 128u, 129u, 450u})
        for (int rule : {30, 54, 90, 110, 150, 255})
            for (int i = 0; i < 10; ++i) {
                const Grid g = random_grid(rng, n);
                ASSERT_EQ(ca_step(g, rule), oracles::ca_reference(g, rule)) << n << " " << rule;
            }
    EXPECT_THROW(ca_step(Grid{0, 1}, 110), shape_error);
}

TEST(Ca, PerturbationsStayInsideLightCone)
{
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = rng.uniform_int(8, 80);
        const int rule = static_cast<int>(rng.below(256));
        const int steps = rng.uniform_int(1, 6);
        Grid a = random_grid(rng, static_cast<std::size_t>(n));
        Grid b = a;
        const int flipped = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
        b[static_cast<std::size_t>(flipped)] ^= 1;
        for (int k = 0; k < steps; ++k) {
            a = ca_step(a, rule);
            b = ca_step(b, rule);
        }
        for (int i = 0; i < n; ++i)
            if (ring_distance(i, flipped, n) > steps) ASSERT_EQ(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)]);
    }
}

TEST(Ca, XorInjectionIsAnInvolution)
{
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = static_cast<std::size_t>(rng.uniform_int(3, 100));
        const Grid p = random_grid(rng, n), s = random_grid(rng, n);
        const Grid once = inject(p, s);
        for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(once[i], p[i] ^ s[i]);
        ASSERT_EQ(inject(p, once), s);
    }
    EXPECT_THROW(inject(Grid(3, 0), Grid(4, 0)), shape_error);
}

TEST(Ca, InjectionRowsAreDistinctWithExactWidth)
{
    const InjectionMap map(60, 20, 3, 4);
    std::set<std::vector<int>> rows;
    for (corpus::TokenId t = 0; t < 60; ++t) {
        const auto& cells = map.cells(t);
        EXPECT_EQ(std::set<int>(cells.begin(), cells.end()).size(), 3u);
        for (int c : cells) {
            EXPECT_GE(c, 0);
            EXPECT_LT(c, 20);
        }
        const auto p = map.projection(t);
        EXPECT_EQ(std::count(p.begin(), p.end(), 1), 3);
        EXPECT_EQ(map.projection(corpus::encode_one_hot(t, 60)), p);
        rows.insert(cells);
    }
    EXPECT_EQ(rows.size(), 60u);
    EXPECT_THROW(map.projection(Eigen::VectorXd::Zero(60)), shape_error);
}

TEST(Ca, TooFewDistinctPatternsIsConfigError)
{
    // C(4, 2) = 6 distinct patterns.
    EXPECT_NO_THROW(InjectionMap(6, 4, 2, 0));
    EXPECT_THROW(InjectionMap(7, 4, 2, 0), config_error);
}

TEST(Ca, FeaturesConcatenateExpansionSteps)
{
    CaConfig c;
    c.rule = 90;
    c.grid_size = 16;
    c.expansion = 3;
    const ReservoirCA ca(c, 5);
    ASSERT_EQ(ca.feature_size(), 48u);
    Grid state = ca.zero_state();
    const Grid start = state;
    const auto f = ca.step(state, 2);
    Grid expected = inject(ca.injection().projection(2), start);
    for (int k = 0; k < 3; ++k) {
        expected = oracles::ca_reference(expected, 90);
        for (int i = 0; i < 16; ++i) EXPECT_EQ(f[k * 16 + i], expected[static_cast<std::size_t>(i)]);
    }
    EXPECT_EQ(state, expected);
}

TEST(Ca, SequencesAreIsolatedAndAligned)
{
    CaConfig c;
    c.grid_size = 40;
    const ReservoirCA ca(c, 6);
    Rng rng(9);
    const auto first = random_tokens(rng, 30, 6);
    const auto second = random_tokens(rng, 30, 6);
    const auto alone = ca.run_sequence(second);
    ca.run_sequence(first);
    EXPECT_EQ(ca.run_sequence(second), alone);

    Grid state = ca.zero_state();
    for (std::size_t t = 0; t < second.size(); ++t)
        EXPECT_EQ(ca.step(state, second[t]), alone.col(static_cast<Eigen::Index>(t)));

    std::vector<std::uint8_t> mask(30, 0);
    mask[0] = mask[10] = 1;
    const auto m = ca.masked_features(second, mask);
    ASSERT_EQ(m.cols(), 2);
    EXPECT_EQ(m.col(0).sum(), 0.0);
    EXPECT_EQ(m.col(1), alone.col(9));
    EXPECT_EQ(ca.name(), "reca:110");
}
