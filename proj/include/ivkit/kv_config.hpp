#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

namespace ivkit {

/// Plain-text `key = value` configuration. Blank lines and lines starting
/// with '#' are ignored; values may be wrapped in double quotes.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint64(const std::string& key) const;
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;

    /// Throws ValidationError naming the first key not in `allowed`.
    void require_known(const std::set<std::string>& allowed) const;

  private:
    const std::string& raw(const std::string& key) const;

    std::string source_;
    std::map<std::string, std::string> values_;
};

}  // namespace ivkit
