#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace uad {

// Flat "key = value" configuration with '#' comments. Keys are kept in a
// sorted map so serialization is stable run to run.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse_file(const std::filesystem::path& path);
    static KeyValueConfig parse_string(const std::string& text);

    bool has(const std::string& key) const { return entries_.count(key) != 0; }
    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    void set_double(const std::string& key, double value);
    void set_int(const std::string& key, long long value);

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const;
    std::vector<double> get_double_list(const std::string& key,
                                        const std::vector<double>& fallback) const;

    const std::map<std::string, std::string>& entries() const { return entries_; }

    std::string serialize() const;
    void write_file(const std::filesystem::path& path) const;

    // FNV-1a over the serialized form; fingerprints a resolved configuration.
    std::string hash_hex() const;

private:
    std::map<std::string, std::string> entries_;
};

}  // namespace uad
