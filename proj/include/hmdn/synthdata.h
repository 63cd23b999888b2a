#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "hmdn/dataset.h"
#include "hmdn/rng.h"
#include "hmdn/visibility.h"

namespace hmdn {

// --- inverse sine ------------------------------------------------------------

/// Noise-free input for target t: t + 0.3 sin(2 pi t).
double inverse_sine_input(double t);

/// n examples with t ~ U(0,1), x = t + 0.3 sin(2 pi t) + N(0, noise_std^2),
/// label y = t. Labels are single and marked occluded so an MDN treats the
/// whole set as multi-valued. D = P = F = 1.
Dataset gen_inverse_sine(int n, double noise_std, std::uint64_t seed);

// --- two-link finger -----------------------------------------------------------

/// Planar two-link finger rooted at the origin.
struct FingerScene {
    static constexpr double kLink1 = 1.0;
    static constexpr double kLink2 = 0.8;
    static constexpr double kMaxTheta1 = 1.5707963267948966;  // pi/2
    static constexpr double kMaxTheta2 = 2.3561944901923448;  // 3pi/4

    double theta1 = 0.0;
    double theta2 = 0.0;

    Eigen::Vector2d mid() const;
    Eigen::Vector2d tip() const;

    /// Angles recovered from a (mid, tip) pair.
    static FingerScene from_points(const Eigen::Vector2d& mid, const Eigen::Vector2d& tip);
};

/// Sentinel written in place of an occluded tip observation.
inline constexpr double kOccludedSentinel = -10.0;

struct FingerOptions {
    double x_occ = 1.2;      ///< tip occluded iff tip.x >= x_occ
    int m_occ = 3;           ///< labels per occluded tip
    double noise_std = 0.01;  ///< observation noise, link-length units
};

/// Intervals of theta2 in [0, 3pi/4] that put the tip at x >= x_occ.
std::vector<std::pair<double, double>> feasible_theta2(double theta1, double x_occ);

/// Uniform draw from feasible_theta2; throws std::domain_error if empty.
double sample_feasible_theta2(double theta1, double x_occ, Rng& rng);

/// One example built from `scene`: input (mid + noise, tip + noise or the
/// sentinel pair), joint 0 = mid (visible), joint 1 = tip (visible with one
/// label, or occluded with m_occ alternative labels from the feasible set).
TrainingExample finger_example(const FingerScene& scene, const FingerOptions& options, Rng& rng);

/// n scenes with theta1 ~ U[0, pi/2], theta2 ~ U[0, 3pi/4]. D = P = 2, F = 4.
Dataset gen_finger_dataset(int n, const FingerOptions& options, std::uint64_t seed);

// --- rendering -----------------------------------------------------------------

/// Axis-aligned occluder rectangle in the image plane, placed at the
/// occluder depth. Empty when x_min >= x_max or y_min >= y_max.
struct OccluderBox {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool empty() const { return !(x_min < x_max) || !(y_min < y_max); }
    bool contains(double x, double y) const {
        return !empty() && x >= x_min && x <= x_max && y >= y_min && y <= y_max;
    }
    /// The slab covering every point with x >= x_occ.
    static OccluderBox half_plane(double x_occ);
    static OccluderBox none() { return {}; }
};

struct RenderOptions {
    int size = 64;
    double capsule_radius = 0.06;
    double sphere_radius = 0.08;
    double finger_depth = 2.0;
    double occluder_depth = 1.0;
    /// Orthographic camera; default maps x in [-1, 2] and y in [-0.6, 2.4]
    /// onto the 64x64 grid.
    Intrinsics intrinsics = default_intrinsics(64);

    static Intrinsics default_intrinsics(int size);
};

struct FingerRender {
    DepthImage image;
    SphereModel spheres;  ///< [mid, tip], centers lifted to finger_depth
};

/// Orthographic render of both links as capsules at finger_depth with the
/// occluder slab in front of them at occluder_depth.
FingerRender render_finger_depth(const FingerScene& scene, const OccluderBox& occluder,
                                 const RenderOptions& options = {});

/// Whether pixel (u, v) of a render lies on the finger capsules (ignoring
/// the occluder).
bool on_finger(const FingerScene& scene, const RenderOptions& options, int u, int v);

// --- dataset files -------------------------------------------------------------

class DatasetParseError : public std::runtime_error {
public:
    DatasetParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Line-delimited text format, see docs/FORMATS.md. Floats are written in
/// shortest round-trip form, so read(write(ds)) is bit-exact.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
void save_dataset(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace hmdn
