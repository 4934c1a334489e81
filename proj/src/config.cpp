#include "fracwave/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "fracwave/errors.hpp"

namespace fracwave {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

// Drops a trailing comment that is not inside a string.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

ConfigValue parse_scalar(const std::string& raw, int line) {
    ConfigValue v;
    v.line = line;
    const std::string s = trim(raw);
    if (s.empty()) fail(line, "missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
        v.kind = ConfigValue::Kind::String;
        v.text = s.substr(1, s.size() - 2);
        if (v.text.find('"') != std::string::npos) fail(line, "stray quote in string");
        return v;
    }
    if (s == "true" || s == "false") {
        v.kind = ConfigValue::Kind::Bool;
        v.boolean = s == "true";
        return v;
    }
    const char* b = s.data();
    const char* e = s.data() + s.size();
    const char* start = (*b == '+') ? b + 1 : b;
    long long iv = 0;
    auto ri = std::from_chars(start, e, iv);
    if (ri.ec == std::errc() && ri.ptr == e) {
        v.kind = ConfigValue::Kind::Integer;
        v.integer = iv;
        v.number = static_cast<double>(iv);
        return v;
    }
    double dv = 0.0;
    auto rd = std::from_chars(start, e, dv);
    if (rd.ec == std::errc() && rd.ptr == e && std::isfinite(dv)) {
        v.kind = ConfigValue::Kind::Number;
        v.number = dv;
        return v;
    }
    fail(line, "cannot parse value '" + s + "'");
}

ConfigValue parse_value(const std::string& raw, int line) {
    const std::string s = trim(raw);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']') fail(line, "unterminated array");
        ConfigValue v;
        v.kind = ConfigValue::Kind::Array;
        v.line = line;
        const std::string body = trim(s.substr(1, s.size() - 2));
        if (body.empty()) return v;
        std::size_t pos = 0;
        while (pos <= body.size()) {
            const std::size_t comma = body.find(',', pos);
            const std::string item = body.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            if (trim(item).empty()) {
                if (comma == std::string::npos) break;  // trailing comma
                fail(line, "empty array item");
            }
            ConfigValue it = parse_scalar(item, line);
            v.items.push_back(it);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return v;
    }
    return parse_scalar(s, line);
}

bool kind_accepts(ConfigValue::Kind want, ConfigValue::Kind have) {
    return want == have || (want == ConfigValue::Kind::Number && have == ConfigValue::Kind::Integer);
}

const ConfigValue* find(const ConfigDoc& d, const std::string& key) {
    auto it = d.entries.find(key);
    return it == d.entries.end() ? nullptr : &it->second;
}

}  // namespace

std::string to_string(ConfigValue::Kind k) {
    switch (k) {
        case ConfigValue::Kind::Number: return "number";
        case ConfigValue::Kind::Integer: return "integer";
        case ConfigValue::Kind::Bool: return "boolean";
        case ConfigValue::Kind::String: return "string";
        case ConfigValue::Kind::Array: return "array";
    }
    return "?";
}

ConfigDoc parse_config(const std::string& text) {
    ConfigDoc doc;
    std::string table;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        ++line_no;
        const std::string line = trim(strip_comment(text.substr(pos, eol - pos)));
        pos = eol + 1;
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(line_no, "malformed table header");
            table = trim(line.substr(1, line.size() - 2));
            if (!valid_key(table)) fail(line_no, "bad table name '" + table + "'");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) fail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail(line_no, "bad key '" + key + "'");
        const std::string full = table.empty() ? key : table + "." + key;
        if (doc.entries.count(full)) fail(line_no, "duplicate key '" + full + "'");
        doc.entries[full] = parse_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

void validate_config(const ConfigDoc& doc, const std::vector<KeySpec>& schema) {
    for (const auto& [key, value] : doc.entries) {
        auto it = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& k) { return k.key == key; });
        if (it == schema.end()) fail(value.line, "unknown key '" + key + "'");
        if (!kind_accepts(it->kind, value.kind))
            fail(value.line, "'" + key + "' must be a " + to_string(it->kind) + ", got " + to_string(value.kind));
        if (value.kind == ConfigValue::Kind::Array) {
            for (const auto& item : value.items) {
                if (!kind_accepts(it->item_kind, item.kind))
                    fail(value.line, "items of '" + key + "' must be " + to_string(it->item_kind) + "s");
            }
        }
    }
}

double ConfigDoc::number(const std::string& key, double fallback) const {
    const auto* v = find(*this, key);
    return v ? v->number : fallback;
}

long long ConfigDoc::integer(const std::string& key, long long fallback) const {
    const auto* v = find(*this, key);
    return v ? v->integer : fallback;
}

bool ConfigDoc::boolean(const std::string& key, bool fallback) const {
    const auto* v = find(*this, key);
    return v ? v->boolean : fallback;
}

std::string ConfigDoc::string(const std::string& key, const std::string& fallback) const {
    const auto* v = find(*this, key);
    return v ? v->text : fallback;
}

std::vector<double> ConfigDoc::numbers(const std::string& key) const {
    std::vector<double> out;
    if (const auto* v = find(*this, key))
        for (const auto& it : v->items) out.push_back(it.number);
    return out;
}

std::vector<long long> ConfigDoc::integers(const std::string& key) const {
    std::vector<long long> out;
    if (const auto* v = find(*this, key))
        for (const auto& it : v->items) out.push_back(it.integer);
    return out;
}

}  // namespace fracwave
