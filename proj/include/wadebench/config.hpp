#pragma once

// Flat key-value configuration text:
//
//     # comment
//     key = value
//
// Keys are unique; later assignments override earlier ones. Used for
// experiment plans and for reservoir/model provenance strings.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wadebench {

class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::filesystem::path& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Values of `other` replace values here.
    void merge(const KeyValueConfig& other);

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Canonical text form: sorted keys, one "key=value" per line.
    std::string to_string() const;

private:
    std::map<std::string, std::string> values_;
};

/// Strict numeric parsing helpers (whole string must be consumed).
std::int64_t parse_int(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);

/// Split on a delimiter, trimming whitespace and dropping empty pieces.
std::vector<std::string> split_list(std::string_view text, char delimiter = ',');
std::string_view trim(std::string_view text);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace wadebench
