#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ampex::cli {

/// Flat dotted-key configuration. Files use TOML-style sections:
///
///   [model]
///   d = 3          # comments with '#'
///   sigma = 0.2, 0.25, 0.3
///
/// which lands as model.d = "3" etc. Every key can be overridden on the
/// command line by a flag of the same dotted name or via --set key=value.
class Config {
public:
    static Config from_file(const std::string& path);

    void set(const std::string& key, std::string value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& key) const;
    std::vector<std::int64_t> get_ints(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

} // namespace ampex::cli
