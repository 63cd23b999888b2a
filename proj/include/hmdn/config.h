#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace hmdn {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat key=value configuration grouped in [sections]. Keys are addressed as
/// "section.key". '#' and ';' start comment lines.
class Config {
public:
    static Config parse(std::istream& in, const std::string& source = "<config>");
    static Config load(const std::filesystem::path& path);

    /// Applies "section.key=value".
    void set_assignment(const std::string& assignment);
    void set(const std::string& key, const std::string& value) { values_[key] = value; }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    /// Throws ConfigError naming the first key not in `allowed`.
    void reject_unknown(const std::set<std::string>& allowed) const;

    const std::map<std::string, std::string>& values() const { return values_; }

    /// Writes keys grouped by section, sorted.
    void write(std::ostream& out) const;

private:
    std::map<std::string, std::string> values_;
};

/// Typed lookups that record the resolved value back into a config.
class Resolver {
public:
    Resolver(const Config& input, Config& resolved) : input_(input), resolved_(resolved) {}

    std::string str(const std::string& key, const std::optional<std::string>& fallback = std::nullopt);
    double real(const std::string& key, std::optional<double> fallback = std::nullopt);
    long long integer(const std::string& key, std::optional<long long> fallback = std::nullopt);
    std::uint64_t u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt);
    bool flag(const std::string& key, std::optional<bool> fallback = std::nullopt);
    std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback);

private:
    std::optional<std::string> raw(const std::string& key) const { return input_.get(key); }

    const Config& input_;
    Config& resolved_;
};

std::string format_double(double v);

}  // namespace hmdn
