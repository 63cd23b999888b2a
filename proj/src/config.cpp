#include "hmdn/config.h"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace hmdn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

}  // namespace

Config Config::parse(std::istream& in, const std::string& source) {
    Config cfg;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        const std::string where = source + ":" + std::to_string(line_no) + ": ";
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(where + "unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (!valid_name(section)) throw ConfigError(where + "bad section name");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(t.substr(0, eq));
        if (!valid_name(key)) throw ConfigError(where + "bad key name");
        if (section.empty()) throw ConfigError(where + "key outside of a [section]");
        cfg.values_[section + "." + key] = trim(t.substr(eq + 1));
    }
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse(in, path.string());
}

void Config::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' is not section.key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const auto dot = key.find('.');
    if (dot == std::string::npos || !valid_name(key.substr(0, dot)) || !valid_name(key.substr(dot + 1)))
        throw ConfigError("override key '" + key + "' is not section.key");
    values_[key] = trim(assignment.substr(eq + 1));
}

std::optional<std::string> Config::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

void Config::reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [key, value] : values_)
        if (allowed.count(key) == 0) throw ConfigError("unknown config key '" + key + "'");
}

void Config::write(std::ostream& out) const {
    std::string current;
    bool first = true;
    for (const auto& [key, value] : values_) {
        const auto dot = key.find('.');
        const std::string section = key.substr(0, dot);
        if (first || section != current) {
            if (!first) out << '\n';
            out << '[' << section << "]\n";
            current = section;
            first = false;
        }
        out << key.substr(dot + 1) << " = " << value << '\n';
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string Resolver::str(const std::string& key, const std::optional<std::string>& fallback) {
    auto v = raw(key);
    if (!v) {
        if (!fallback) throw ConfigError("missing required config key '" + key + "'");
        v = fallback;
    }
    resolved_.set(key, *v);
    return *v;
}

double Resolver::real(const std::string& key, std::optional<double> fallback) {
    const auto v = raw(key);
    double out = 0.0;
    if (v) {
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size())
            throw ConfigError("config key '" + key + "' expects a number, got '" + *v + "'");
    } else if (fallback) {
        out = *fallback;
    } else {
        throw ConfigError("missing required config key '" + key + "'");
    }
    resolved_.set(key, format_double(out));
    return out;
}

long long Resolver::integer(const std::string& key, std::optional<long long> fallback) {
    const auto v = raw(key);
    long long out = 0;
    if (v) {
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size())
            throw ConfigError("config key '" + key + "' expects an integer, got '" + *v + "'");
    } else if (fallback) {
        out = *fallback;
    } else {
        throw ConfigError("missing required config key '" + key + "'");
    }
    resolved_.set(key, std::to_string(out));
    return out;
}

std::uint64_t Resolver::u64(const std::string& key, std::optional<std::uint64_t> fallback) {
    const auto v = raw(key);
    std::uint64_t out = 0;
    if (v) {
        const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
        if (res.ec != std::errc() || res.ptr != v->data() + v->size())
            throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + *v + "'");
    } else if (fallback) {
        out = *fallback;
    } else {
        throw ConfigError("missing required config key '" + key + "'");
    }
    resolved_.set(key, std::to_string(out));
    return out;
}

bool Resolver::flag(const std::string& key, std::optional<bool> fallback) {
    const auto v = raw(key);
    bool out = false;
    if (v) {
        if (*v == "true" || *v == "1" || *v == "yes")
            out = true;
        else if (*v == "false" || *v == "0" || *v == "no")
            out = false;
        else
            throw ConfigError("config key '" + key + "' expects true/false, got '" + *v + "'");
    } else if (fallback) {
        out = *fallback;
    } else {
        throw ConfigError("missing required config key '" + key + "'");
    }
    resolved_.set(key, out ? "true" : "false");
    return out;
}

std::vector<int> Resolver::int_list(const std::string& key, const std::vector<int>& fallback) {
    std::vector<int> out;
    if (const auto v = raw(key)) {
        std::stringstream ss(*v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            int x = 0;
            const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
            if (res.ec != std::errc() || res.ptr != item.data() + item.size())
                throw ConfigError("config key '" + key + "' expects a comma-separated integer list");
            out.push_back(x);
        }
    } else {
        out = fallback;
    }
    std::string joined;
    for (std::size_t i = 0; i < out.size(); ++i) joined += (i ? "," : "") + std::to_string(out[i]);
    resolved_.set(key, joined);
    return out;
}

}  // namespace hmdn
