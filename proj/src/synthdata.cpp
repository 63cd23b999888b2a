#include "hmdn/synthdata.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hmdn {

double inverse_sine_input(double t) { return t + 0.3 * std::sin(2.0 * std::numbers::pi * t); }

Dataset gen_inverse_sine(int n, double noise_std, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_inverse_sine: n must be >= 1");
    if (!(noise_std >= 0.0)) throw std::invalid_argument("gen_inverse_sine: noise_std must be >= 0");
    Rng rng(seed);
    Dataset ds;
    ds.info.generator = "inverse-sine";
    ds.info.joints = 1;
    ds.info.dim = 1;
    ds.info.feature_width = 1;
    ds.info.m_occ = 1;
    ds.info.x_occ = 0.0;
    ds.info.seed = seed;
    ds.examples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double t = rng.uniform();
        TrainingExample ex;
        ex.input = Eigen::VectorXd::Constant(1, inverse_sine_input(t) + noise_std * rng.normal());
        ex.joints.push_back(JointLabelSet{{Point::Constant(1, t)}, false});
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

Eigen::Vector2d FingerScene::mid() const {
    return {kLink1 * std::cos(theta1), kLink1 * std::sin(theta1)};
}

Eigen::Vector2d FingerScene::tip() const {
    const double phi = theta1 + theta2;
    return mid() + Eigen::Vector2d(kLink2 * std::cos(phi), kLink2 * std::sin(phi));
}

FingerScene FingerScene::from_points(const Eigen::Vector2d& mid, const Eigen::Vector2d& tip) {
    const double t1 = std::atan2(mid.y(), mid.x());
    const Eigen::Vector2d link = tip - mid;
    double t2 = std::atan2(link.y(), link.x()) - t1;
    if (t2 < -std::numbers::pi) t2 += 2.0 * std::numbers::pi;
    if (t2 > std::numbers::pi) t2 -= 2.0 * std::numbers::pi;
    return {t1, t2};
}

std::vector<std::pair<double, double>> feasible_theta2(double theta1, double x_occ) {
    // tip.x >= x_occ  <=>  cos(phi) >= c with phi = theta1 + theta2.
    const double c = (x_occ - FingerScene::kLink1 * std::cos(theta1)) / FingerScene::kLink2;
    const double lo = theta1;
    const double hi = theta1 + FingerScene::kMaxTheta2;
    std::vector<std::pair<double, double>> phi_intervals;
    if (c > 1.0) return {};
    if (c <= -1.0) {
        phi_intervals.emplace_back(lo, hi);
    } else {
        // cos(phi) >= c on [-a, a] + 2 pi k.
        const double a = std::acos(c);
        for (int k = -1; k <= 1; ++k) {
            const double a_lo = -a + 2.0 * std::numbers::pi * k;
            const double a_hi = a + 2.0 * std::numbers::pi * k;
            const double s = std::max(lo, a_lo);
            const double e = std::min(hi, a_hi);
            if (s < e) phi_intervals.emplace_back(s, e);
        }
    }
    std::vector<std::pair<double, double>> out;
    for (const auto& [s, e] : phi_intervals) out.emplace_back(s - theta1, e - theta1);
    return out;
}

double sample_feasible_theta2(double theta1, double x_occ, Rng& rng) {
    const auto intervals = feasible_theta2(theta1, x_occ);
    double total = 0.0;
    for (const auto& [s, e] : intervals) total += e - s;
    if (!(total > 0.0)) throw std::domain_error("no feasible theta2 puts the tip behind the occluder");
    double u = rng.uniform() * total;
    for (const auto& [s, e] : intervals) {
        if (u < e - s) return s + u;
        u -= e - s;
    }
    return intervals.back().second;
}

TrainingExample finger_example(const FingerScene& scene, const FingerOptions& options, Rng& rng) {
    const Eigen::Vector2d mid = scene.mid();
    const Eigen::Vector2d tip = scene.tip();
    const bool occluded = tip.x() >= options.x_occ;

    TrainingExample ex;
    ex.input.resize(4);
    ex.input[0] = mid.x() + options.noise_std * rng.normal();
    ex.input[1] = mid.y() + options.noise_std * rng.normal();
    if (occluded) {
        ex.input[2] = kOccludedSentinel;
        ex.input[3] = kOccludedSentinel;
    } else {
        ex.input[2] = tip.x() + options.noise_std * rng.normal();
        ex.input[3] = tip.y() + options.noise_std * rng.normal();
    }

    ex.joints.push_back(JointLabelSet{{Point(mid)}, true});
    JointLabelSet tip_labels;
    tip_labels.visible = !occluded;
    if (!occluded) {
        tip_labels.labels.push_back(Point(tip));
    } else {
        for (int m = 0; m < options.m_occ; ++m) {
            const FingerScene alt{scene.theta1, sample_feasible_theta2(scene.theta1, options.x_occ, rng)};
            tip_labels.labels.push_back(Point(alt.tip()));
        }
    }
    ex.joints.push_back(std::move(tip_labels));
    return ex;
}

Dataset gen_finger_dataset(int n, const FingerOptions& options, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_finger_dataset: n must be >= 1");
    if (options.m_occ < 1) throw std::invalid_argument("gen_finger_dataset: m_occ must be >= 1");
    if (!(options.noise_std >= 0.0)) throw std::invalid_argument("gen_finger_dataset: noise_std must be >= 0");
    Rng rng(seed);
    Dataset ds;
    ds.info.generator = "finger";
    ds.info.joints = 2;
    ds.info.dim = 2;
    ds.info.feature_width = 4;
    ds.info.m_occ = options.m_occ;
    ds.info.x_occ = options.x_occ;
    ds.info.seed = seed;
    ds.examples.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        FingerScene scene;
        scene.theta1 = rng.uniform(0.0, FingerScene::kMaxTheta1);
        scene.theta2 = rng.uniform(0.0, FingerScene::kMaxTheta2);
        ds.examples.push_back(finger_example(scene, options, rng));
    }
    return ds;
}

OccluderBox OccluderBox::half_plane(double x_occ) {
    constexpr double kFar = 1e30;
    return {x_occ, kFar, -kFar, kFar};
}

Intrinsics RenderOptions::default_intrinsics(int size) {
    constexpr double kXMin = -1.0;
    constexpr double kYMin = -0.6;
    constexpr double kExtent = 3.0;
    Intrinsics k;
    k.fx = k.fy = size / kExtent;
    // Pixel center u sits at x = kXMin + (u + 0.5) / fx.
    k.cx = -kXMin * k.fx - 0.5;
    k.cy = -kYMin * k.fy - 0.5;
    k.projection = Projection::orthographic;
    return k;
}

namespace {

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    const Eigen::Vector2d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    return (p - (a + t * ab)).norm();
}

Eigen::Vector2d pixel_center(const Intrinsics& k, int u, int v) {
    return {(u - k.cx) / k.fx, (v - k.cy) / k.fy};
}

}  // namespace

bool on_finger(const FingerScene& scene, const RenderOptions& options, int u, int v) {
    const Eigen::Vector2d p = pixel_center(options.intrinsics, u, v);
    const Eigen::Vector2d mid = scene.mid();
    return segment_distance(p, Eigen::Vector2d::Zero(), mid) <= options.capsule_radius ||
           segment_distance(p, mid, scene.tip()) <= options.capsule_radius;
}

FingerRender render_finger_depth(const FingerScene& scene, const OccluderBox& occluder,
                                 const RenderOptions& options) {
    if (options.size < 1) throw std::invalid_argument("render: size must be >= 1");
    if (options.intrinsics.projection != Projection::orthographic)
        throw std::invalid_argument("render: only orthographic cameras are supported");
    FingerRender out;
    out.image.width = out.image.height = options.size;
    out.image.intrinsics = options.intrinsics;
    out.image.depths.assign(static_cast<std::size_t>(options.size) * options.size, 0.0f);
    for (int v = 0; v < options.size; ++v) {
        for (int u = 0; u < options.size; ++u) {
            const Eigen::Vector2d p = pixel_center(options.intrinsics, u, v);
            float depth = 0.0f;
            if (on_finger(scene, options, u, v)) depth = static_cast<float>(options.finger_depth);
            if (occluder.contains(p.x(), p.y())) {
                const auto occ = static_cast<float>(options.occluder_depth);
                depth = depth > 0.0f ? std::min(depth, occ) : occ;
            }
            out.image.at(u, v) = depth;
        }
    }
    for (const Eigen::Vector2d& c : {scene.mid(), scene.tip()}) {
        out.spheres.centers.emplace_back(c.x(), c.y(), options.finger_depth);
        out.spheres.radii.push_back(options.sphere_radius);
    }
    return out;
}

}  // namespace hmdn
