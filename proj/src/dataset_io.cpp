// Dataset text format (one record per line, space-separated tokens):
//
//   #hmdn-dataset version=1 generator=<name> D=<joints> P=<dim> F=<features> m_occ=<int> x_occ=<float> seed=<u64>
//   <F feature values> then, for each of the D joints: <visible 0|1> <M> <M*P label coordinates>
//
// Floats use the shortest representation that round-trips exactly.

#include <charconv>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string_view>

#include "hmdn/synthdata.h"

namespace hmdn {

bool identical(const Dataset& a, const Dataset& b) {
    auto same = [](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
        return x.size() == y.size() &&
               (x.size() == 0 || std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0);
    };
    if (!(a.info == b.info) || a.examples.size() != b.examples.size()) return false;
    for (std::size_t n = 0; n < a.examples.size(); ++n) {
        const auto& ea = a.examples[n];
        const auto& eb = b.examples[n];
        if (!same(ea.input, eb.input) || ea.joints.size() != eb.joints.size()) return false;
        for (std::size_t d = 0; d < ea.joints.size(); ++d) {
            const auto& ja = ea.joints[d];
            const auto& jb = eb.joints[d];
            if (ja.visible != jb.visible || ja.labels.size() != jb.labels.size()) return false;
            for (std::size_t m = 0; m < ja.labels.size(); ++m)
                if (!same(ja.labels[m], jb.labels[m])) return false;
        }
    }
    return true;
}

double occlusion_rate(const Dataset& dataset) {
    std::size_t total = 0, occluded = 0;
    for (const auto& ex : dataset.examples)
        for (const auto& j : ex.joints) {
            ++total;
            occluded += j.visible ? 0 : 1;
        }
    return total == 0 ? 0.0 : static_cast<double>(occluded) / static_cast<double>(total);
}

double occlusion_rate(const Dataset& dataset, int joint) {
    std::size_t total = 0, occluded = 0;
    for (const auto& ex : dataset.examples) {
        if (joint < 0 || static_cast<std::size_t>(joint) >= ex.joints.size()) continue;
        ++total;
        occluded += ex.joints[static_cast<std::size_t>(joint)].visible ? 0 : 1;
    }
    return total == 0 ? 0.0 : static_cast<double>(occluded) / static_cast<double>(total);
}

namespace {

constexpr std::string_view kMagic = "#hmdn-dataset";

void put_double(std::ostream& out, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
}

class Tokens {
public:
    Tokens(const std::string& line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    std::string_view next() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
        if (pos_ >= line_.size()) throw DatasetParseError(line_no_, "record ends early");
        const std::size_t start = pos_;
        while (pos_ < line_.size() && line_[pos_] != ' ' && line_[pos_] != '\t' && line_[pos_] != '\r') ++pos_;
        return std::string_view(line_).substr(start, pos_ - start);
    }

    double number() {
        const auto tok = next();
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw DatasetParseError(line_no_, "bad number '" + std::string(tok) + "'");
        return v;
    }

    long long integer() {
        const auto tok = next();
        long long v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw DatasetParseError(line_no_, "bad integer '" + std::string(tok) + "'");
        return v;
    }

    void expect_end() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
        if (pos_ != line_.size()) throw DatasetParseError(line_no_, "trailing tokens");
    }

private:
    const std::string& line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

DatasetInfo parse_header(const std::string& line) {
    std::istringstream in(line);
    std::string magic;
    in >> magic;
    if (magic != kMagic) throw DatasetParseError(1, "missing '#hmdn-dataset' header");
    std::map<std::string, std::string> fields;
    std::string kv;
    while (in >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw DatasetParseError(1, "header field without '=': " + kv);
        fields[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    auto take = [&](const char* key) {
        const auto it = fields.find(key);
        if (it == fields.end()) throw DatasetParseError(1, std::string("header lacks ") + key);
        std::string v = it->second;
        fields.erase(it);
        return v;
    };
    DatasetInfo info;
    try {
        info.schema_version = std::stoi(take("version"));
        info.generator = take("generator");
        info.joints = std::stoi(take("D"));
        info.dim = std::stoi(take("P"));
        info.feature_width = std::stoi(take("F"));
        info.m_occ = std::stoi(take("m_occ"));
        const std::string x_occ = take("x_occ");
        const auto res = std::from_chars(x_occ.data(), x_occ.data() + x_occ.size(), info.x_occ);
        if (res.ec != std::errc()) throw DatasetParseError(1, "bad x_occ");
        info.seed = std::stoull(take("seed"));
    } catch (const DatasetParseError&) {
        throw;
    } catch (const std::exception&) {
        throw DatasetParseError(1, "malformed header value");
    }
    if (!fields.empty()) throw DatasetParseError(1, "unknown header field " + fields.begin()->first);
    if (info.schema_version != 1) throw DatasetParseError(1, "unsupported schema version");
    if (info.joints < 1 || info.dim < 1 || info.feature_width < 1)
        throw DatasetParseError(1, "D, P and F must be >= 1");
    return info;
}

}  // namespace

void write_dataset(std::ostream& out, const Dataset& dataset) {
    const auto& info = dataset.info;
    out << kMagic << " version=" << info.schema_version << " generator=" << info.generator
        << " D=" << info.joints << " P=" << info.dim << " F=" << info.feature_width
        << " m_occ=" << info.m_occ << " x_occ=";
    put_double(out, info.x_occ);
    out << " seed=" << info.seed << '\n';
    for (const auto& ex : dataset.examples) {
        if (ex.input.size() != info.feature_width || ex.joints.size() != static_cast<std::size_t>(info.joints))
            throw std::invalid_argument("write_dataset: example does not match header shape");
        for (Eigen::Index i = 0; i < ex.input.size(); ++i) {
            if (i > 0) out << ' ';
            put_double(out, ex.input[i]);
        }
        for (const auto& j : ex.joints) {
            out << ' ' << (j.visible ? 1 : 0) << ' ' << j.labels.size();
            for (const auto& y : j.labels) {
                if (y.size() != info.dim) throw std::invalid_argument("write_dataset: label dimension mismatch");
                for (Eigen::Index i = 0; i < y.size(); ++i) {
                    out << ' ';
                    put_double(out, y[i]);
                }
            }
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("dataset write failed");
}

Dataset read_dataset(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DatasetParseError(1, "empty file");
    Dataset ds;
    ds.info = parse_header(line);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        Tokens tok(line, line_no);
        TrainingExample ex;
        ex.input.resize(ds.info.feature_width);
        for (int i = 0; i < ds.info.feature_width; ++i) ex.input[i] = tok.number();
        for (int d = 0; d < ds.info.joints; ++d) {
            JointLabelSet j;
            const long long vis = tok.integer();
            if (vis != 0 && vis != 1) throw DatasetParseError(line_no, "visibility bit must be 0 or 1");
            j.visible = vis == 1;
            const long long m = tok.integer();
            if (m < 1 || m > 1'000'000) throw DatasetParseError(line_no, "label count must be >= 1");
            if (j.visible && m != 1) throw DatasetParseError(line_no, "visible joint must have exactly one label");
            for (long long k = 0; k < m; ++k) {
                Point y(ds.info.dim);
                for (int p = 0; p < ds.info.dim; ++p) y[p] = tok.number();
                j.labels.push_back(std::move(y));
            }
            ex.joints.push_back(std::move(j));
        }
        tok.expect_end();
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_dataset(out, dataset);
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    return read_dataset(in);
}

}  // namespace hmdn
