#include "uad/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "uad/csv.hpp"
#include "uad/errors.hpp"

namespace uad {

namespace {

std::string strip(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double_or_throw(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
    return v;
}

long long parse_int_or_throw(const std::string& key, const std::string& value) {
    const char* begin = value.c_str();
    char* end = nullptr;
    errno = 0;
    long long v = std::strtoll(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
    return v;
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : value) {
        if (ch == ',') {
            parts.push_back(strip(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cur = strip(cur);
    if (!cur.empty() || !parts.empty()) parts.push_back(cur);
    return parts;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value', got '" + line + "'");
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        cfg.entries_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

void KeyValueConfig::set_double(const std::string& key, double value) {
    entries_[key] = csv::fmt_g17(value);
}

void KeyValueConfig::set_int(const std::string& key, long long value) {
    entries_[key] = std::to_string(value);
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_double_or_throw(key, it->second);
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : parse_int_or_throw(key, it->second);
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    const char* begin = it->second.c_str();
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ConfigError("config key '" + key + "': not an unsigned integer: '" +
                          it->second + "'");
    return v;
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<int> out;
    for (const auto& part : split_list(it->second))
        out.push_back(static_cast<int>(parse_int_or_throw(key, part)));
    return out;
}

std::vector<double> KeyValueConfig::get_double_list(
    const std::string& key, const std::vector<double>& fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<double> out;
    for (const auto& part : split_list(it->second))
        out.push_back(parse_double_or_throw(key, part));
    return out;
}

std::string KeyValueConfig::serialize() const {
    std::string out;
    for (const auto& [key, value] : entries_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

void KeyValueConfig::write_file(const std::filesystem::path& path) const {
    csv::AtomicWriter writer(path);
    writer.stream() << serialize();
    writer.commit();
}

std::string KeyValueConfig::hash_hex() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char ch : serialize()) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace uad
