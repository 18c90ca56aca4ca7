#include "wadebench/readout.hpp"

#include "wadebench/config.hpp"
#include "wadebench/errors.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace wadebench::readout {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits)
{
    if (logits.size() == 0) throw shape_error("softmax of an empty vector");
    Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp().matrix();
    return e / e.sum();
}

LinearReadout::LinearReadout(std::size_t feature_size, std::size_t vocabulary_size, ReadoutConfig config)
    : config_(config)
{
    if (feature_size < 1 || vocabulary_size < 1) throw config_error("readout dimensions must be >= 1");
    if (!(config.learning_rate >= 0.0) || !(config.weight_decay >= 0.0))
        throw config_error("learning rate and weight decay must be >= 0");
    weights_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(feature_size), static_cast<Eigen::Index>(vocabulary_size));
}

void LinearReadout::set_weights(const Eigen::MatrixXd& weights)
{
    if (weights.rows() != weights_.rows() || weights.cols() != weights_.cols())
        throw shape_error("readout weights must be " + std::to_string(weights_.rows()) + "x" +
                          std::to_string(weights_.cols()));
    weights_ = weights;
}

void LinearReadout::check_feature(const Eigen::VectorXd& feature) const
{
    if (feature.size() != weights_.rows())
        throw shape_error("feature has length " + std::to_string(feature.size()) + ", expected " +
                          std::to_string(weights_.rows()));
}

void LinearReadout::check_target(TokenId target) const
{
    if (target < 0 || target >= weights_.cols())
        throw vocabulary_error("target token " + std::to_string(target) + " outside vocabulary of size " +
                               std::to_string(weights_.cols()));
}

Eigen::VectorXd LinearReadout::logits(const Eigen::VectorXd& feature) const
{
    check_feature(feature);
    return weights_.transpose() * feature;
}

Eigen::VectorXd LinearReadout::predict(const Eigen::VectorXd& feature) const
{
    return softmax(logits(feature));
}

TokenId LinearReadout::predict_token(const Eigen::VectorXd& feature) const
{
    Eigen::Index best = 0;
    logits(feature).maxCoeff(&best);
    return static_cast<TokenId>(best);
}

double LinearReadout::loss(const Eigen::VectorXd& feature, TokenId target) const
{
    check_target(target);
    const Eigen::VectorXd z = logits(feature);
    const double m = z.maxCoeff();
    return std::log((z.array() - m).exp().sum()) + m - z[target];
}

Eigen::MatrixXd LinearReadout::gradient(const Eigen::VectorXd& feature, TokenId target) const
{
    check_target(target);
    Eigen::VectorXd g = predict(feature);
    g[target] -= 1.0;
    return feature * g.transpose();
}

TrainEvent LinearReadout::sgd_update(const Eigen::VectorXd& feature, TokenId target)
{
    check_target(target);
    const Eigen::VectorXd z = logits(feature);
    const double m = z.maxCoeff();
    Eigen::VectorXd p = (z.array() - m).exp().matrix();
    const double sum = p.sum();
    const double loss = std::log(sum) + m - z[target];
    p /= sum;
    p[target] -= 1.0;
    const double lr = config_.learning_rate;
    if (config_.weight_decay != 0.0) weights_ *= 1.0 - lr * config_.weight_decay;
    weights_.noalias() -= (lr * feature) * p.transpose();
    return TrainEvent{++updates_, loss};
}

double LinearReadout::train(const Eigen::MatrixXd& features, std::span<const TokenId> targets)
{
    if (static_cast<std::size_t>(features.cols()) != targets.size())
        throw shape_error("feature columns and targets differ in number");
    double total = 0.0;
    for (Eigen::Index j = 0; j < features.cols(); ++j)
        total += sgd_update(features.col(j), targets[static_cast<std::size_t>(j)]).loss;
    return total;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m)
{
    out << "#wadebench-matrix 1\n" << m.rows() << ' ' << m.cols() << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ' ';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Eigen::MatrixXd read_matrix(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || trim(line) != "#wadebench-matrix 1")
        throw format_error("matrix line 1: expected header '#wadebench-matrix 1'");
    if (!std::getline(in, line)) throw format_error("matrix line 2: missing shape");
    const auto dims = split_list(line, ' ');
    if (dims.size() != 2) throw format_error("matrix line 2: expected 'rows cols'");
    const auto rows = parse_int(dims[0], "rows");
    const auto cols = parse_int(dims[1], "cols");
    if (rows < 0 || cols < 0) throw format_error("matrix line 2: negative shape");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto line_no = std::to_string(i + 3);
        if (!std::getline(in, line)) throw format_error("matrix line " + line_no + ": missing row");
        const auto values = split_list(line, ' ');
        if (static_cast<Eigen::Index>(values.size()) != cols)
            throw format_error("matrix line " + line_no + ": expected " + std::to_string(cols) + " values");
        for (Eigen::Index j = 0; j < cols; ++j) {
            try {
                m(i, j) = parse_double(values[static_cast<std::size_t>(j)], "matrix entry");
            } catch (const error& e) {
                throw format_error("matrix line " + line_no + ": " + e.what());
            }
        }
    }
    return m;
}

void LinearReadout::save(std::ostream& out) const
{
    write_matrix(out, weights_);
}

void LinearReadout::save(const std::filesystem::path& path) const
{
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path.string());
    save(out);
    if (!out) throw io_error("failed writing " + path.string());
}

LinearReadout LinearReadout::load(std::istream& in, ReadoutConfig config)
{
    Eigen::MatrixXd w = read_matrix(in);
    if (w.rows() < 1 || w.cols() < 1) throw format_error("readout matrix must be nonempty");
    LinearReadout r(static_cast<std::size_t>(w.rows()), static_cast<std::size_t>(w.cols()), config);
    r.weights_ = std::move(w);
    return r;
}

LinearReadout LinearReadout::load(const std::filesystem::path& path, ReadoutConfig config)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path.string());
    return load(in, config);
}

std::size_t count_correct(const LinearReadout& model, const Eigen::MatrixXd& features,
                          std::span<const TokenId> targets)
{
    if (features.rows() != static_cast<Eigen::Index>(model.feature_size()))
        throw shape_error("feature rows do not match the readout");
    if (static_cast<std::size_t>(features.cols()) != targets.size())
        throw shape_error("feature columns and targets differ in number");
    const Eigen::MatrixXd z = model.weights().transpose() * features;  // L x N
    std::size_t correct = 0;
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        Eigen::Index best = 0;
        z.col(j).maxCoeff(&best);
        if (best == targets[static_cast<std::size_t>(j)]) ++correct;
    }
    return correct;
}

double masked_accuracy(const LinearReadout& model, const Eigen::MatrixXd& features,
                       std::span<const TokenId> tokens, std::span<const std::uint8_t> mask)
{
    if (tokens.size() != mask.size() || static_cast<std::size_t>(features.cols()) != tokens.size())
        throw shape_error("features, tokens and mask must have the same length");
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.feature_size()));
    std::size_t total = 0, correct = 0;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (!mask[t]) continue;
        ++total;
        const Eigen::VectorXd f = t == 0 ? zero : Eigen::VectorXd(features.col(static_cast<Eigen::Index>(t) - 1));
        if (model.predict_token(f) == tokens[t]) ++correct;
    }
    if (total == 0) throw undefined_accuracy_error("sequence has no masked positions");
    return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace wadebench::readout
