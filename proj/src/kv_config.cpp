#include "ivkit/kv_config.hpp"

#include "ivkit/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ivkit {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_as(std::string_view text, const std::string& key, std::string_view source) {
    T v{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ValidationError(std::string(source) + ": key '" + key + "' has invalid value '" + std::string(text) + "'");
    }
    return v;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
    KeyValueConfig cfg;
    cfg.source_ = source;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view t = trim(line);
        if (t.empty() || t.front() == '#' || t.front() == '[') continue;
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError(std::string(source) + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key(trim(t.substr(0, eq)));
        std::string_view val = trim(t.substr(eq + 1));
        if (const auto hash = val.find(" #"); hash != std::string_view::npos) val = trim(val.substr(0, hash));
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') val = val.substr(1, val.size() - 2);
        if (key.empty()) throw ValidationError(std::string(source) + ":" + std::to_string(lineno) + ": empty key");
        if (!cfg.values_.emplace(key, std::string(val)).second) {
            throw ValidationError(std::string(source) + ": duplicate key '" + key + "'");
        }
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

const std::string& KeyValueConfig::raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError(source_ + ": missing key '" + key + "'");
    return it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
    const std::string& s = raw(key);
    if (s == "inf" || s == "+inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    return parse_as<double>(s, key, source_);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string& key) const {
    return parse_as<std::int64_t>(raw(key), key, source_);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key) const {
    return parse_as<std::uint64_t>(raw(key), key, source_);
}

std::uint64_t KeyValueConfig::get_uint64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_uint64(key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ValidationError(source_ + ": key '" + key + "' is not a boolean");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? raw(key) : fallback;
}

void KeyValueConfig::require_known(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : values_) {
        if (!allowed.count(k)) throw ValidationError(source_ + ": unknown key '" + k + "'");
    }
}

}  // namespace ivkit
