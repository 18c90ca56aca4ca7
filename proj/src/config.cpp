#include "wadebench/config.hpp"

#include "wadebench/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace wadebench {

std::string_view trim(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view text, char delimiter)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(delimiter, start);
        if (end == std::string_view::npos) end = text.size();
        auto piece = trim(text.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end + 1;
    }
    return out;
}

std::int64_t parse_int(std::string_view text, std::string_view what)
{
    text = trim(text);
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw format_error("invalid integer for " + std::string(what) + ": '" + std::string(text) + "'");
    return value;
}

std::uint64_t parse_uint(std::string_view text, std::string_view what)
{
    text = trim(text);
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw format_error("invalid unsigned integer for " + std::string(what) + ": '" + std::string(text) + "'");
    return value;
}

double parse_double(std::string_view text, std::string_view what)
{
    text = trim(text);
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw format_error("invalid number for " + std::string(what) + ": '" + std::string(text) + "'");
    return value;
}

std::string format_double(double value)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) throw format_error("cannot format number");
    return std::string(buf, ptr);
}

KeyValueConfig KeyValueConfig::parse(std::string_view text)
{
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw format_error("line " + std::to_string(line_no) + ": expected 'key = value'");
        auto key = trim(line.substr(0, eq));
        if (key.empty()) throw format_error("line " + std::to_string(line_no) + ": empty key");
        cfg.values_[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const
{
    return get(key).value_or(fallback);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const
{
    auto v = get(key);
    return v ? parse_int(*v, key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint(const std::string& key, std::uint64_t fallback) const
{
    auto v = get(key);
    return v ? parse_uint(*v, key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    auto v = get(key);
    return v ? parse_double(*v, key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw format_error("invalid boolean for " + key + ": '" + *v + "'");
}

void KeyValueConfig::merge(const KeyValueConfig& other)
{
    for (const auto& [k, v] : other.values_) values_[k] = v;
}

std::string KeyValueConfig::to_string() const
{
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

}  // namespace wadebench
