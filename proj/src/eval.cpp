#include "hmdn/eval.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace hmdn {

std::vector<Point> point_prediction(const MlpModel& model, const Eigen::VectorXd& x, Rng* rng) {
    const auto params = predict(model, x);
    std::vector<Point> out;
    out.reserve(params.size());
    for (const auto& p : params) {
        if (rng != nullptr)
            out.push_back(sample_model_joint(p, model.mode, 1, *rng).front().point);
        else
            out.push_back(mode_point(p, model.mode));
    }
    return out;
}

double nearest_label_distance(const Point& p, const JointLabelSet& labels) {
    if (labels.labels.empty()) throw std::invalid_argument("nearest_label_distance: no labels");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& y : labels.labels) {
        if (y.size() != p.size()) throw std::invalid_argument("nearest_label_distance: dimension mismatch");
        best = std::min(best, (p - y).norm());
    }
    return best;
}

ErrorSplit mean_error_split(std::span<const std::vector<Point>> predictions,
                            std::span<const std::vector<JointLabelSet>> labels) {
    if (predictions.size() != labels.size())
        throw std::invalid_argument("mean_error_split: prediction and label counts differ");
    double vis_sum = 0.0, occ_sum = 0.0;
    std::size_t vis_n = 0, occ_n = 0;
    for (std::size_t n = 0; n < predictions.size(); ++n) {
        if (predictions[n].size() != labels[n].size())
            throw std::invalid_argument("mean_error_split: joint counts differ");
        for (std::size_t d = 0; d < labels[n].size(); ++d) {
            const double e = nearest_label_distance(predictions[n][d], labels[n][d]);
            if (labels[n][d].visible) {
                vis_sum += e;
                ++vis_n;
            } else {
                occ_sum += e;
                ++occ_n;
            }
        }
    }
    ErrorSplit out;
    if (vis_n > 0) out.vis_err = vis_sum / static_cast<double>(vis_n);
    if (occ_n > 0) out.occ_err = occ_sum / static_cast<double>(occ_n);
    return out;
}

std::vector<std::pair<double, double>> pct_within_curve(std::span<const double> errors,
                                                        std::span<const double> thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw std::invalid_argument("pct_within_curve: thresholds must ascend");
    std::vector<double> sorted(errors.begin(), errors.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::pair<double, double>> curve;
    curve.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto within = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
        const double prop = sorted.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(sorted.size());
        curve.emplace_back(t, prop);
    }
    return curve;
}

std::vector<double> linear_thresholds(double max, int steps) {
    if (steps < 2) throw std::invalid_argument("linear_thresholds: need at least 2 steps");
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = max * i / (steps - 1);
    return out;
}

double set_min_distance(std::span<const Point> samples, std::span<const Point> labels) {
    if (samples.empty() || labels.empty()) throw std::invalid_argument("set_min_distance: empty set");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples)
        for (const auto& y : labels) {
            if (s.size() != y.size()) throw std::invalid_argument("set_min_distance: dimension mismatch");
            best = std::min(best, (s - y).norm());
        }
    return best;
}

double min_sample_error(const HmdnJointParams& params, ModelMode mode, const JointLabelSet& labels,
                        int k, Rng& rng) {
    if (k < 1) throw std::invalid_argument("min_sample_error: k must be >= 1");
    const auto samples = sample_model_joint(params, mode, static_cast<std::size_t>(k), rng);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) best = std::min(best, nearest_label_distance(s.point, labels));
    return best;
}

double min_sample_error(const MlpModel& model, const Eigen::VectorXd& x, int joint,
                        const JointLabelSet& labels, int k, Rng& rng) {
    const auto params = predict(model, x);
    if (joint < 0 || static_cast<std::size_t>(joint) >= params.size())
        throw std::invalid_argument("min_sample_error: joint index out of range");
    return min_sample_error(params[static_cast<std::size_t>(joint)], model.mode, labels, k, rng);
}

double location_nll(const HmdnJointParams& params, ModelMode mode, const Point& y) {
    if (mode == ModelMode::sgn) return -log_normal_iso(y, params.mu, params.sigma);
    return -marginal_log_pdf(params, y);
}

namespace {

MetricStat stat_of(const std::vector<double>& values) {
    MetricStat s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        // Shifted by the first value so identical repeats give exactly zero.
        double shift = 0.0;
        for (double v : values) shift += v - values[0];
        shift /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - values[0] - shift) * (v - values[0] - shift);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace

MetricReport evaluate(const MlpModel& model, const Dataset& dataset, const ProtocolConfig& protocol) {
    if (dataset.examples.empty()) throw std::invalid_argument("evaluate: dataset is empty");
    if (protocol.repeats < 1 || protocol.set_samples < 1)
        throw std::invalid_argument("evaluate: repeats and set_samples must be >= 1");
    std::vector<int> ks = protocol.ks;
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty() || ks.front() < 1) throw std::invalid_argument("evaluate: ks must be >= 1");
    const auto thresholds = linear_thresholds(protocol.threshold_max, protocol.threshold_steps);

    const std::size_t N = dataset.examples.size();
    std::vector<std::vector<HmdnJointParams>> params;
    params.reserve(N);
    for (const auto& ex : dataset.examples) {
        params.push_back(predict(model, ex.input));
        if (params.back().size() != ex.joints.size())
            throw std::invalid_argument("evaluate: dataset joints do not match the model head");
    }

    MetricReport report;
    report.repeats = protocol.repeats;
    double nll_sum = 0.0;
    std::size_t nll_n = 0;
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t d = 0; d < params[n].size(); ++d) {
            const auto& labels = dataset.examples[n].joints[d];
            (labels.visible ? report.n_vis : report.n_occ) += 1;
            for (const auto& y : labels.labels) {
                nll_sum += location_nll(params[n][d], model.mode, y);
                ++nll_n;
            }
        }
    report.nll = nll_sum / static_cast<double>(nll_n);

    const int max_k = ks.back();
    std::vector<double> vis_means, occ_means, set_means;
    std::vector<std::vector<double>> mink_vis(ks.size()), mink_occ(ks.size());
    std::vector<double> curve_sum(thresholds.size(), 0.0);
    std::vector<double> errors;
    errors.reserve(report.n_vis + report.n_occ);

    for (int r = 0; r < protocol.repeats; ++r) {
        const std::uint64_t repeat_seed = Rng::split(protocol.seed, static_cast<std::uint64_t>(r));
        errors.clear();
        double vis_sum = 0.0, occ_sum = 0.0, set_sum = 0.0;
        std::vector<double> kv(ks.size(), 0.0), ko(ks.size(), 0.0);
        for (std::size_t n = 0; n < N; ++n) {
            Rng rng = Rng::stream(repeat_seed, n);
            for (std::size_t d = 0; d < params[n].size(); ++d) {
                const auto& p = params[n][d];
                const auto& labels = dataset.examples[n].joints[d];
                const Point point = protocol.deterministic
                                        ? mode_point(p, model.mode)
                                        : sample_model_joint(p, model.mode, 1, rng).front().point;
                const double e = nearest_label_distance(point, labels);
                errors.push_back(e);
                (labels.visible ? vis_sum : occ_sum) += e;

                const auto draws = sample_model_joint(p, model.mode, static_cast<std::size_t>(max_k), rng);
                double best = std::numeric_limits<double>::infinity();
                std::size_t next_k = 0;
                for (int i = 0; i < max_k; ++i) {
                    best = std::min(best, nearest_label_distance(draws[static_cast<std::size_t>(i)].point, labels));
                    while (next_k < ks.size() && ks[next_k] == i + 1) {
                        (labels.visible ? kv : ko)[next_k] += best;
                        ++next_k;
                    }
                }

                if (!labels.visible) {
                    const auto set = sample_model_joint(p, model.mode, static_cast<std::size_t>(protocol.set_samples), rng);
                    std::vector<Point> points;
                    points.reserve(set.size());
                    for (const auto& s : set) points.push_back(s.point);
                    set_sum += set_min_distance(points, labels.labels);
                }
            }
        }
        if (report.n_vis > 0) vis_means.push_back(vis_sum / static_cast<double>(report.n_vis));
        if (report.n_occ > 0) {
            occ_means.push_back(occ_sum / static_cast<double>(report.n_occ));
            set_means.push_back(set_sum / static_cast<double>(report.n_occ));
        }
        for (std::size_t i = 0; i < ks.size(); ++i) {
            if (report.n_vis > 0) mink_vis[i].push_back(kv[i] / static_cast<double>(report.n_vis));
            if (report.n_occ > 0) mink_occ[i].push_back(ko[i] / static_cast<double>(report.n_occ));
        }
        const auto curve = pct_within_curve(errors, thresholds);
        for (std::size_t i = 0; i < curve.size(); ++i) curve_sum[i] += curve[i].second;
    }

    if (report.n_vis > 0) report.vis_err = stat_of(vis_means);
    if (report.n_occ > 0) {
        report.occ_err = stat_of(occ_means);
        report.set_min = stat_of(set_means);
    }
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (report.n_vis > 0) report.mink_vis.push_back({ks[i], stat_of(mink_vis[i])});
        if (report.n_occ > 0) report.mink_occ.push_back({ks[i], stat_of(mink_occ[i])});
    }
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        report.curve.emplace_back(thresholds[i], curve_sum[i] / protocol.repeats);
    check_report_invariants(report);
    return report;
}

void check_report_invariants(const MetricReport& report) {
    double prev_t = -std::numeric_limits<double>::infinity();
    double prev_p = 0.0;
    for (const auto& [t, p] : report.curve) {
        if (p < 0.0 || p > 1.0) throw std::logic_error("report: curve proportion outside [0,1]");
        if (t < prev_t || p < prev_p - 1e-12) throw std::logic_error("report: curve is not non-decreasing");
        prev_t = t;
        prev_p = p;
    }
    for (const auto* rows : {&report.mink_vis, &report.mink_occ})
        for (std::size_t i = 1; i < rows->size(); ++i)
            if ((*rows)[i].error.mean > (*rows)[i - 1].error.mean + 1e-12)
                throw std::logic_error("report: best-of-k error increases with k");
}

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void stat_row(std::ostream& out, const char* name, const std::optional<MetricStat>& s) {
    out << name << ',';
    if (s)
        out << num(s->mean) << ',' << num(s->std) << '\n';
    else
        out << "NA,NA\n";
}

}  // namespace

void write_report_csv(std::ostream& out, const MetricReport& report) {
    out << "[summary]\nmetric,value,std\n";
    stat_row(out, "vis_err", report.vis_err);
    stat_row(out, "occ_err", report.occ_err);
    stat_row(out, "set_min", report.set_min);
    out << "nll," << num(report.nll) << ",0\n";
    out << "repeats," << report.repeats << ",0\n";
    out << "n_vis," << report.n_vis << ",0\n";
    out << "n_occ," << report.n_occ << ",0\n";
    out << "\n[curve]\nthreshold,proportion\n";
    for (const auto& [t, p] : report.curve) out << num(t) << ',' << num(p) << '\n';
    out << "\n[mink_vis]\nk,mean_min_error,std\n";
    for (const auto& row : report.mink_vis) out << row.k << ',' << num(row.error.mean) << ',' << num(row.error.std) << '\n';
    out << "\n[mink_occ]\nk,mean_min_error,std\n";
    for (const auto& row : report.mink_occ) out << row.k << ',' << num(row.error.mean) << ',' << num(row.error.std) << '\n';
}

void save_report_csv(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    write_report_csv(out, report);
}

}  // namespace hmdn
