#pragma once

// Seeded random source with distribution helpers whose output depends only on
// the engine stream (std:: distributions are implementation-defined, which
// would break byte-identical regeneration across standard libraries).

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace wadebench {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a, used for tagging derived seeds and config fingerprints.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Derive an independent seed from a base seed and a list of tags.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags)
{
    std::uint64_t h = mix64(base);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t));
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n)
    {
        // 2^64 mod n; values below it would bias the low residues.
        const std::uint64_t threshold = (0 - n) % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x < threshold);
        return x % n;
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi)
    {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool coin(double p_true = 0.5) { return uniform01() < p_true; }

    template <typename T>
    void shuffle(std::span<T> items)
    {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items)
    {
        shuffle(std::span<T>(items));
    }

    /// k distinct indices from [0, n), in draw order.
    std::vector<int> sample_without_replacement(int n, int k)
    {
        std::vector<int> pool(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < k; ++i) {
            auto j = static_cast<std::size_t>(i) + below(static_cast<std::uint64_t>(n - i));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(k));
        return pool;
    }

    template <typename T>
    const T& pick(const std::vector<T>& items)
    {
        return items[below(items.size())];
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace wadebench
