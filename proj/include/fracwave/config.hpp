#pragma once

// A small TOML subset: [table] headers, key = value lines, '#' comments.
// Values are numbers, booleans, double-quoted strings, or flat arrays of those.

#include <map>
#include <string>
#include <vector>

namespace fracwave {

struct ConfigValue {
    enum class Kind { Number, Integer, Bool, String, Array };
    Kind kind = Kind::Number;
    double number = 0.0;
    long long integer = 0;
    bool boolean = false;
    std::string text;
    std::vector<ConfigValue> items;
    int line = 0;
};

std::string to_string(ConfigValue::Kind k);

struct ConfigDoc {
    /// Keys are "table.key" (or just "key" before any table header).
    std::map<std::string, ConfigValue> entries;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    bool boolean(const std::string& key, bool fallback) const;
    std::string string(const std::string& key, const std::string& fallback) const;
    std::vector<double> numbers(const std::string& key) const;
    std::vector<long long> integers(const std::string& key) const;
};

/// Throws ConfigError naming the offending line.
ConfigDoc parse_config(const std::string& text);

struct KeySpec {
    std::string key;
    ConfigValue::Kind kind;
    /// For arrays, the kind every item must have.
    ConfigValue::Kind item_kind = ConfigValue::Kind::Number;
};

/// Rejects keys not in the schema and values of the wrong kind (integers are accepted
/// where numbers are expected).
void validate_config(const ConfigDoc& doc, const std::vector<KeySpec>& schema);

}  // namespace fracwave
