#include "nodal/config.hpp"

#include "nodal/types.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nodal {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
    KeyValueConfig config;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        config.values_[std::string(key)] = std::string(value);
    }
    return config;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string KeyValueConfig::dump() const {
    std::string out;
    for (const auto& [key, value] : values_) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    }
    return out;
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
    const auto value = get(key);
    if (!value) return fallback;
    try {
        std::size_t used = 0;
        const double parsed = std::stod(*value, &used);
        if (used != value->size()) throw std::invalid_argument(*value);
        return parsed;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": not a number: " + *value);
    }
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
    const auto value = get(key);
    if (!value) return fallback;
    long long parsed = 0;
    const auto* end = value->data() + value->size();
    const auto [ptr, ec] = std::from_chars(value->data(), end, parsed);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("key " + key + ": not an integer: " + *value);
    }
    return parsed;
}

std::vector<double> KeyValueConfig::get_list(const std::string& key) const {
    std::vector<double> out;
    const auto value = get(key);
    if (!value) return out;
    std::string item;
    std::stringstream stream(*value);
    while (std::getline(stream, item, ',')) {
        const auto t = trim(item);
        if (t.empty()) continue;
        try {
            out.push_back(std::stod(std::string(t)));
        } catch (const std::exception&) {
            throw ConfigError("key " + key + ": bad list entry " + std::string(t));
        }
    }
    return out;
}

std::vector<std::string> KeyValueConfig::keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> keys;
    for (auto it = values_.lower_bound(prefix); it != values_.end(); ++it) {
        if (it->first.compare(0, prefix.size(), prefix) != 0) break;
        keys.push_back(it->first);
    }
    return keys;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    const auto dots = text.find("..");
    try {
        if (dots == std::string::npos) {
            const auto v = std::stoull(text);
            return {v, v};
        }
        const auto a = std::stoull(text.substr(0, dots));
        const auto b = std::stoull(text.substr(dots + 2));
        if (b < a) throw ConfigError("empty seed range " + text);
        return {a, b};
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        throw ConfigError("bad seed range " + text);
    }
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

}  // namespace nodal
