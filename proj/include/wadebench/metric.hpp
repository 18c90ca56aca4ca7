#pragma once

// Time-to-threshold and the Weighted Average Data Efficiency (WADE) score.
//
// A curve records test accuracy at training steps. T(alpha) is the first
// recorded step whose accuracy reaches alpha (never reached counts as an
// infinite time), and
//
//     WADE = sum_alpha alpha / T(alpha)  /  sum_alpha alpha
//
// over a fixed set of accuracy checkpoints, with 1/inf taken as 0.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wadebench::metric {

struct CurvePoint {
    std::int64_t step = 0;
    double accuracy = 0.0;

    bool operator==(const CurvePoint&) const = default;
};

/// Steps strictly increasing and >= 1, accuracies in [0, 1]. May be empty.
class AccuracyCurve {
public:
    AccuracyCurve() = default;
    /// Throws format_error if the invariants do not hold.
    explicit AccuracyCurve(std::vector<CurvePoint> points);

    /// Appends a point; throws format_error on a non-increasing step.
    void push_back(CurvePoint p);

    const std::vector<CurvePoint>& points() const { return points_; }
    bool empty() const { return points_.empty(); }
    std::size_t size() const { return points_.size(); }

    /// Highest recorded accuracy (0 for an empty curve).
    double max_accuracy() const;

    bool operator==(const AccuracyCurve&) const = default;

private:
    std::vector<CurvePoint> points_;
};

/// Strictly increasing thresholds in (0, 1]; nonempty.
class CheckpointSet {
public:
    explicit CheckpointSet(std::vector<double> thresholds);

    /// {1/n, 2/n, ..., 1}. n = 10 gives the default set.
    static CheckpointSet evenly_spaced(int n);
    static CheckpointSet standard() { return evenly_spaced(10); }

    const std::vector<double>& thresholds() const { return thresholds_; }

    bool operator==(const CheckpointSet&) const = default;

private:
    std::vector<double> thresholds_;
};

/// First recorded step with accuracy >= alpha; nullopt when never reached.
std::optional<std::int64_t> time_to_threshold(double alpha, const AccuracyCurve& curve);

double wade(const AccuracyCurve& curve, const CheckpointSet& checkpoints = CheckpointSet::standard());

/// CSV with header "step,accuracy". Errors carry the offending line number.
AccuracyCurve read_curve_csv(std::istream& in);
AccuracyCurve read_curve_csv(const std::filesystem::path& path);
void write_curve_csv(std::ostream& out, const AccuracyCurve& curve);

double wade_from_file(const std::filesystem::path& path,
                      const CheckpointSet& checkpoints = CheckpointSet::standard());

/// When to evaluate during training: every `dense_every` steps up to
/// `dense_until`, then every `sparse_every`; the final step always counts.
struct Cadence {
    std::int64_t dense_every = 10;
    std::int64_t dense_until = 100;
    std::int64_t sparse_every = 50;

    bool due(std::int64_t step, std::int64_t final_step) const;
    /// "E" (every E steps) or "E:U:S".
    static Cadence parse(std::string_view text);
    std::string to_string() const;

    bool operator==(const Cadence&) const = default;
};

}  // namespace wadebench::metric
