#include "cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ampex/errors.hpp"

namespace ampex::cli {

namespace {

std::string trim(const std::string& value) {
    const auto begin = value.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = value.find_last_not_of(" \t\r\n");
    return value.substr(begin, end - begin + 1);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

std::string unquote(std::string value) {
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
        return value.substr(1, value.size() - 2);
    return value;
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    Config config;
    std::string section;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string content = trim(strip_comment(line));
        if (content.empty()) continue;
        if (content.front() == '[') {
            if (content.back() != ']')
                throw ConfigError(path + ":" + std::to_string(line_number) + ": unclosed section");
            section = trim(content.substr(1, content.size() - 2));
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(line_number) + ": expected key = value");
        const std::string key = trim(content.substr(0, eq));
        if (key.empty())
            throw ConfigError(path + ":" + std::to_string(line_number) + ": empty key");
        const std::string value = unquote(trim(content.substr(eq + 1)));
        config.set(section.empty() ? key : section + "." + key, value);
    }
    return config;
}

void Config::set(const std::string& key, std::string value) {
    values_[key] = std::move(value);
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

std::string Config::get_string(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key) const {
    const std::string raw = get_string(key);
    try {
        std::size_t used = 0;
        const double value = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return value;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': '" + raw + "' is not a number");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

std::int64_t Config::get_int(const std::string& key) const {
    const std::string raw = get_string(key);
    std::int64_t value = 0;
    const auto res = std::from_chars(raw.data(), raw.data() + raw.size(), value);
    if (res.ec != std::errc{} || res.ptr != raw.data() + raw.size())
        throw ConfigError("config key '" + key + "': '" + raw + "' is not an integer");
    return value;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string raw = get_string(key);
    if (raw == "true" || raw == "1" || raw == "yes" || raw == "on") return true;
    if (raw == "false" || raw == "0" || raw == "no" || raw == "off") return false;
    throw ConfigError("config key '" + key + "': '" + raw + "' is not a boolean");
}

std::vector<double> Config::get_doubles(const std::string& key) const {
    const std::string raw = get_string(key);
    std::vector<double> out;
    std::stringstream stream(raw);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const std::string token = trim(item);
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "': '" + token + "' is not a number");
        }
    }
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<std::int64_t> Config::get_ints(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (double v : get_doubles(key)) {
        const auto as_int = static_cast<std::int64_t>(v);
        if (static_cast<double>(as_int) != v)
            throw ConfigError("config key '" + key + "': expected integers");
        out.push_back(as_int);
    }
    return out;
}

} // namespace ampex::cli
