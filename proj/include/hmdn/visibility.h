#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

namespace hmdn {

enum class Projection { orthographic = 0, pinhole = 1 };

/// Back-projection of pixel (u = column, v = row) with depth z:
///   orthographic: X = (u - cx) / fx,      Y = (v - cy) / fy,      Z = z
///   pinhole:      X = (u - cx) * z / fx,  Y = (v - cy) * z / fy,  Z = z
struct Intrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    Projection projection = Projection::orthographic;

    bool operator==(const Intrinsics&) const = default;
};

/// Row-major depth map; 0 marks background.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> depths;
    Intrinsics intrinsics;

    float at(int u, int v) const { return depths[static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v) { return depths[static_cast<std::size_t>(v) * width + u]; }
    Eigen::Vector3d back_project(int u, int v) const;

    bool operator==(const DepthImage&) const = default;
};

/// Per-joint spheres in camera coordinates.
struct SphereModel {
    std::vector<Eigen::Vector3d> centers;
    std::vector<double> radii;

    std::size_t size() const { return centers.size(); }
};

struct PixelAssignment {
    std::vector<int> counts;  ///< foreground pixels assigned to each sphere
    int unassigned = 0;
    int foreground = 0;
};

/// Throws std::invalid_argument on malformed images or sphere models.
void validate(const DepthImage& img);
void validate(const SphereModel& model);

/// Assigns each foreground pixel to the sphere with the smallest surface
/// distance (|p - c| - r). Pixels whose best surface distance exceeds
/// `max_surface_distance` stay unassigned; a negative value selects the
/// default cutoff of twice the largest radius. Ties go to the lower index.
PixelAssignment assign_pixels(const DepthImage& img, const SphereModel& model,
                              double max_surface_distance = -1.0);

/// visible[d] = counts[d] >= tau_pix.
std::vector<bool> label_visibility(const std::vector<int>& counts, int tau_pix);

inline constexpr int kDefaultTauPix = 10;

// Flat binary depth file, little-endian:
//   magic "HMDNDEP\0" (8 bytes), u32 width, u32 height, u32 projection,
//   f64 fx, fy, cx, cy, then width*height f32 depths, row-major.
void write_depth(std::ostream& out, const DepthImage& img);
DepthImage read_depth(std::istream& in);
void save_depth(const std::filesystem::path& path, const DepthImage& img);
DepthImage load_depth(const std::filesystem::path& path);

/// 16-bit binary PGM (P5, maxval 65535); pixel value = round(depth * scale),
/// saturated at 65535.
void export_pgm(const std::filesystem::path& path, const DepthImage& img, double scale = 1000.0);

}  // namespace hmdn
