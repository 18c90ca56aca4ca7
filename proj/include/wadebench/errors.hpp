#pragma once

// Error types shared by every module. Each carries a stable machine-readable
// code that the CLI and the HTTP service expose verbatim.

#include <stdexcept>
#include <string>
#include <string_view>

namespace wadebench {

enum class error_kind {
    config,
    format,
    shape,
    vocabulary,
    index,
    io,
    session,
    empty_score,
    undefined_accuracy,
};

/// Stable lowercase code for an error kind ("config", "format", ...).
inline std::string_view error_code(error_kind kind) noexcept;

class error : public std::runtime_error {
public:
    error(error_kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind)
    {
    }

    error_kind kind() const noexcept { return kind_; }
    std::string_view code() const noexcept { return error_code(kind_); }

private:
    error_kind kind_;
};

struct config_error : error {
    explicit config_error(const std::string& what) : error(error_kind::config, what) {}
};

struct format_error : error {
    explicit format_error(const std::string& what) : error(error_kind::format, what) {}
};

struct shape_error : error {
    explicit shape_error(const std::string& what) : error(error_kind::shape, what) {}
};

struct vocabulary_error : error {
    explicit vocabulary_error(const std::string& what) : error(error_kind::vocabulary, what) {}
};

struct index_error : error {
    explicit index_error(const std::string& what) : error(error_kind::index, what) {}
};

struct io_error : error {
    explicit io_error(const std::string& what) : error(error_kind::io, what) {}
};

struct session_error : error {
    explicit session_error(const std::string& what) : error(error_kind::session, what) {}
};

struct empty_score_error : error {
    explicit empty_score_error(const std::string& what) : error(error_kind::empty_score, what) {}
};

struct undefined_accuracy_error : error {
    explicit undefined_accuracy_error(const std::string& what)
      : error(error_kind::undefined_accuracy, what)
    {
    }
};

inline std::string_view error_code(error_kind kind) noexcept
{
    switch (kind) {
    case error_kind::config: return "config";
    case error_kind::format: return "format";
    case error_kind::shape: return "shape";
    case error_kind::vocabulary: return "vocabulary";
    case error_kind::index: return "index";
    case error_kind::io: return "io";
    case error_kind::session: return "session";
    case error_kind::empty_score: return "empty_score";
    case error_kind::undefined_accuracy: return "undefined_accuracy";
    }
    return "unknown";
}

}  // namespace wadebench
