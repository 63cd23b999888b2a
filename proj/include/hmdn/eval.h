#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hmdn/dataset.h"
#include "hmdn/mixture_head.h"
#include "hmdn/net.h"
#include "hmdn/rng.h"

namespace hmdn {

/// Per-joint points for one input. With `rng` one gated sample per joint is
/// drawn; without it the deterministic variant returns mu for the unimodal
/// branch and the heaviest component center otherwise.
std::vector<Point> point_prediction(const MlpModel& model, const Eigen::VectorXd& x, Rng* rng);

/// Euclidean distance from `p` to the nearest label of the set.
double nearest_label_distance(const Point& p, const JointLabelSet& labels);

struct ErrorSplit {
    std::optional<double> vis_err;  ///< absent when no visible joints
    std::optional<double> occ_err;  ///< absent when no occluded joints
};

/// Mean nearest-label error over visible and occluded joints separately.
/// predictions[n][d] pairs with labels[n][d].
ErrorSplit mean_error_split(std::span<const std::vector<Point>> predictions,
                            std::span<const std::vector<JointLabelSet>> labels);

/// Proportion of errors <= each threshold. Thresholds must ascend.
std::vector<std::pair<double, double>> pct_within_curve(std::span<const double> errors,
                                                        std::span<const double> thresholds);

/// Evenly spaced thresholds 0..max inclusive.
std::vector<double> linear_thresholds(double max, int steps);

/// Minimum distance between any pair drawn from the two sets.
double set_min_distance(std::span<const Point> samples, std::span<const Point> labels);

/// Draws k test-time samples for one joint and returns the smallest
/// nearest-label distance among them.
double min_sample_error(const HmdnJointParams& params, ModelMode mode, const JointLabelSet& labels,
                        int k, Rng& rng);

/// Same, with the joint's parameters predicted by `model` for input x.
double min_sample_error(const MlpModel& model, const Eigen::VectorXd& x, int joint,
                        const JointLabelSet& labels, int k, Rng& rng);

/// Negative log density of y under the model's test-time distribution.
double location_nll(const HmdnJointParams& params, ModelMode mode, const Point& y);

struct ProtocolConfig {
    int repeats = 100;
    std::vector<int> ks = {1, 5, 20, 100};
    int set_samples = 100;
    double threshold_max = 1.6;
    int threshold_steps = 50;
    bool deterministic = false;  ///< deterministic point predictions
    std::uint64_t seed = 0;
};

struct MetricStat {
    double mean = 0.0;
    double std = 0.0;  ///< across repeats
};

struct KRow {
    int k = 1;
    MetricStat error;
};

struct MetricReport {
    std::optional<MetricStat> vis_err;
    std::optional<MetricStat> occ_err;
    std::vector<std::pair<double, double>> curve;  ///< all joints, mean over repeats
    std::vector<KRow> mink_vis;
    std::vector<KRow> mink_occ;
    std::optional<MetricStat> set_min;  ///< occluded joints
    double nll = 0.0;                   ///< mean per label
    int repeats = 0;
    std::size_t n_vis = 0;
    std::size_t n_occ = 0;
};

/// Runs every protocol. Each repeat draws from streams (seed, repeat, example)
/// so results do not depend on evaluation order. Best-of-k uses nested
/// prefixes of one stream of max(ks) samples per joint, so mink rows never
/// increase with k.
MetricReport evaluate(const MlpModel& model, const Dataset& dataset, const ProtocolConfig& protocol);

/// Throws std::logic_error if proportions leave [0,1], the curve decreases,
/// or a best-of-k row increases with k.
void check_report_invariants(const MetricReport& report);

void write_report_csv(std::ostream& out, const MetricReport& report);
void save_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace hmdn
