#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nodal {

// Flat "key = value" configuration block. Lines starting with '#' are
// comments; keys may be dotted ("params.degree"). Later keys override
// earlier ones. Dumping is canonical (sorted keys), which is what the
// config and spec hashes are computed over.
class KeyValueConfig {
public:
    KeyValueConfig() = default;

    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::string& path);

    std::string dump() const;

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    void erase(const std::string& key) { values_.erase(key); }

    std::optional<std::string> get(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_list(const std::string& key) const;

    // Keys beginning with `prefix`, in sorted order.
    std::vector<std::string> keys_with_prefix(const std::string& prefix) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

// FNV-1a, 64 bit.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

std::string hex64(std::uint64_t value);

// Parses "a..b" (inclusive) or a single integer.
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text);

std::string format_double(double value);

}  // namespace nodal
