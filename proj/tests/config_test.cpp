#include "wadebench/config.hpp"
#include "wadebench/errors.hpp"
#include "wadebench/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

using namespace wadebench;

TEST(KeyValueConfig, ParsesCommentsBlankLinesAndOverrides)
{
    const auto c = KeyValueConfig::parse("# plan\n\n tasks = 1,5 \nruns=3\nruns = 4  # trailing\n");
    EXPECT_EQ(c.get_string("tasks", ""), "1,5");
    EXPECT_EQ(c.get_int("runs", 0), 4);
    EXPECT_EQ(c.get_int("missing", 7), 7);
    EXPECT_FALSE(c.has("missing"));
}

TEST(KeyValueConfig, RejectsMalformedLines)
{
    EXPECT_THROW(KeyValueConfig::parse("no equals sign\n"), format_error);
    EXPECT_THROW(KeyValueConfig::parse(" = 3\n"), format_error);
}

TEST(KeyValueConfig, TypedGettersAreStrict)
{
    const auto c = KeyValueConfig::parse("a = 12x\nb = yes\nc = maybe\nd = -3\ne = 0.25\n");
    EXPECT_THROW(c.get_int("a", 0), format_error);
    EXPECT_TRUE(c.get_bool("b", false));
    EXPECT_THROW(c.get_bool("c", false), format_error);
    EXPECT_EQ(c.get_int("d", 0), -3);
    EXPECT_THROW(c.get_uint("d", 0), format_error);
    EXPECT_DOUBLE_EQ(c.get_double("e", 0.0), 0.25);
}

TEST(KeyValueConfig, CanonicalTextRoundTrips)
{
    KeyValueConfig c;
    c.set("z", "1");
    c.set("a", "two words");
    const auto text = c.to_string();
    EXPECT_EQ(KeyValueConfig::parse(text).values(), c.values());
    EXPECT_LT(text.find("a="), text.find("z="));
}

TEST(KeyValueConfig, MergeOverrides)
{
    auto a = KeyValueConfig::parse("x = 1\ny = 2\n");
    a.merge(KeyValueConfig::parse("y = 3\nz = 4\n"));
    EXPECT_EQ(a.get_int("x", 0), 1);
    EXPECT_EQ(a.get_int("y", 0), 3);
    EXPECT_EQ(a.get_int("z", 0), 4);
}

TEST(KeyValueConfig, MissingFileIsIoError)
{
    EXPECT_THROW(KeyValueConfig::load("/nonexistent/plan.cfg"), io_error);
}

TEST(Config, SplitListTrimsAndDropsEmpty)
{
    EXPECT_EQ(split_list(" a, b ,,c "), (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_TRUE(split_list("  ").empty());
}

TEST(Config, FormatDoubleRoundTripsRandomBitPatterns)
{
    Rng rng(42);
    for (int i = 0; i < 10000; ++i) {
        double x;
        const std::uint64_t bits = rng.next();
        std::memcpy(&x, &bits, sizeof x);
        if (!std::isfinite(x)) continue;
        const double back = parse_double(format_double(x), "x");
        EXPECT_EQ(std::memcmp(&x, &back, sizeof x), 0) << format_double(x);
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0), "1");
}

TEST(Rng, BelowStaysInRangeAndCoversIt)
{
    Rng rng(1);
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.below(7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, SampleWithoutReplacementIsDistinct)
{
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = rng.sample_without_replacement(20, 8);
        std::sort(s.begin(), s.end());
        EXPECT_EQ(std::adjacent_find(s.begin(), s.end()), s.end());
        EXPECT_GE(s.front(), 0);
        EXPECT_LT(s.back(), 20);
    }
}

TEST(Rng, DerivedSeedsDependOnEveryTag)
{
    const auto a = derive_seed(0, {fnv1a("data"), 1, 0});
    EXPECT_NE(a, derive_seed(0, {fnv1a("data"), 1, 1}));
    EXPECT_NE(a, derive_seed(0, {fnv1a("data"), 2, 0}));
    EXPECT_NE(a, derive_seed(1, {fnv1a("data"), 1, 0}));
    EXPECT_EQ(a, derive_seed(0, {fnv1a("data"), 1, 0}));
}
