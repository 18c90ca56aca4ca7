#include "wadebench/metric.hpp"

#include "wadebench/config.hpp"
#include "wadebench/errors.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace wadebench::metric {

namespace {

void check_point(const CurvePoint& p, const CurvePoint* previous)
{
    if (p.step < 1) throw format_error("curve steps must be >= 1, got " + std::to_string(p.step));
    if (!(p.accuracy >= 0.0 && p.accuracy <= 1.0))
        throw format_error("accuracy must lie in [0, 1], got " + format_double(p.accuracy));
    if (previous && p.step <= previous->step)
        throw format_error("curve steps must be strictly increasing (" + std::to_string(previous->step) +
                           " then " + std::to_string(p.step) + ")");
}

}  // namespace

AccuracyCurve::AccuracyCurve(std::vector<CurvePoint> points)
{
    points_.reserve(points.size());
    for (const auto& p : points) push_back(p);
}

void AccuracyCurve::push_back(CurvePoint p)
{
    check_point(p, points_.empty() ? nullptr : &points_.back());
    points_.push_back(p);
}

double AccuracyCurve::max_accuracy() const
{
    double best = 0.0;
    for (const auto& p : points_) best = std::max(best, p.accuracy);
    return best;
}

CheckpointSet::CheckpointSet(std::vector<double> thresholds) : thresholds_(std::move(thresholds))
{
    if (thresholds_.empty()) throw config_error("checkpoint set must be nonempty");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) {
        const double a = thresholds_[i];
        if (!(a > 0.0 && a <= 1.0)) throw config_error("checkpoints must lie in (0, 1]");
        if (i > 0 && !(a > thresholds_[i - 1])) throw config_error("checkpoints must be strictly increasing");
    }
}

CheckpointSet CheckpointSet::evenly_spaced(int n)
{
    if (n < 1) throw config_error("need at least one checkpoint");
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(n));
    // i / n rather than accumulated increments, so 0.3 is the literal 0.3.
    for (int i = 1; i <= n; ++i) t.push_back(static_cast<double>(i) / static_cast<double>(n));
    return CheckpointSet(std::move(t));
}

std::optional<std::int64_t> time_to_threshold(double alpha, const AccuracyCurve& curve)
{
    for (const auto& p : curve.points())
        if (p.accuracy >= alpha) return p.step;
    return std::nullopt;
}

double wade(const AccuracyCurve& curve, const CheckpointSet& checkpoints)
{
    double weighted = 0.0;
    double total = 0.0;
    for (double alpha : checkpoints.thresholds()) {
        total += alpha;
        if (auto t = time_to_threshold(alpha, curve)) weighted += alpha / static_cast<double>(*t);
    }
    return weighted / total;
}

AccuracyCurve read_curve_csv(std::istream& in)
{
    AccuracyCurve curve;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        const auto body = trim(line);
        if (body.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (body == "step,accuracy") continue;
            // Headerless files are accepted when the first row is numeric.
        }
        const auto comma = body.find(',');
        if (comma == std::string_view::npos || body.find(',', comma + 1) != std::string_view::npos)
            throw format_error("curve line " + std::to_string(line_no) + ": expected 'step,accuracy'");
        try {
            CurvePoint p{parse_int(body.substr(0, comma), "step"), parse_double(body.substr(comma + 1), "accuracy")};
            curve.push_back(p);
        } catch (const error& e) {
            throw format_error("curve line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return curve;
}

AccuracyCurve read_curve_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open curve file " + path.string());
    return read_curve_csv(in);
}

void write_curve_csv(std::ostream& out, const AccuracyCurve& curve)
{
    out << "step,accuracy\n";
    for (const auto& p : curve.points()) out << p.step << ',' << format_double(p.accuracy) << '\n';
}

double wade_from_file(const std::filesystem::path& path, const CheckpointSet& checkpoints)
{
    return wade(read_curve_csv(path), checkpoints);
}

bool Cadence::due(std::int64_t step, std::int64_t final_step) const
{
    if (step < 1) return false;
    if (step == final_step) return true;
    return step <= dense_until ? step % dense_every == 0 : step % sparse_every == 0;
}

Cadence Cadence::parse(std::string_view text)
{
    const auto parts = split_list(text, ':');
    Cadence c;
    if (parts.size() == 1) {
        c.dense_every = c.sparse_every = parse_int(parts[0], "cadence");
        c.dense_until = 0;
    } else if (parts.size() == 3) {
        c.dense_every = parse_int(parts[0], "cadence dense interval");
        c.dense_until = parse_int(parts[1], "cadence dense limit");
        c.sparse_every = parse_int(parts[2], "cadence sparse interval");
    } else {
        throw config_error("cadence must be 'E' or 'E:U:S', got '" + std::string(text) + "'");
    }
    if (c.dense_every < 1 || c.sparse_every < 1 || c.dense_until < 0)
        throw config_error("cadence intervals must be >= 1");
    return c;
}

std::string Cadence::to_string() const
{
    if (dense_until == 0 && dense_every == sparse_every) return std::to_string(dense_every);
    return std::to_string(dense_every) + ":" + std::to_string(dense_until) + ":" + std::to_string(sparse_every);
}

}  // namespace wadebench::metric
