#include "hmdn/visibility.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace hmdn {

Eigen::Vector3d DepthImage::back_project(int u, int v) const {
    const double z = at(u, v);
    const double du = u - intrinsics.cx;
    const double dv = v - intrinsics.cy;
    if (intrinsics.projection == Projection::pinhole)
        return {du * z / intrinsics.fx, dv * z / intrinsics.fy, z};
    return {du / intrinsics.fx, dv / intrinsics.fy, z};
}

void validate(const DepthImage& img) {
    if (img.width < 0 || img.height < 0 ||
        img.depths.size() != static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height))
        throw std::invalid_argument("depth image: size does not match width*height");
    if (!(img.intrinsics.fx > 0.0) || !(img.intrinsics.fy > 0.0))
        throw std::invalid_argument("depth image: focal length must be positive");
    for (float d : img.depths)
        if (!(d >= 0.0f) || !std::isfinite(d)) throw std::invalid_argument("depth image: depths must be finite and >= 0");
}

void validate(const SphereModel& model) {
    if (model.centers.size() != model.radii.size())
        throw std::invalid_argument("sphere model: centers and radii differ in length");
    for (double r : model.radii)
        if (!(r > 0.0)) throw std::invalid_argument("sphere model: radii must be positive");
}

PixelAssignment assign_pixels(const DepthImage& img, const SphereModel& model,
                              double max_surface_distance) {
    validate(img);
    validate(model);
    const double cutoff = max_surface_distance >= 0.0
                              ? max_surface_distance
                              : 2.0 * (model.radii.empty() ? 0.0 : *std::max_element(model.radii.begin(), model.radii.end()));
    PixelAssignment out;
    out.counts.assign(model.size(), 0);
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            if (img.at(u, v) <= 0.0f) continue;
            ++out.foreground;
            const Eigen::Vector3d p = img.back_project(u, v);
            double best = std::numeric_limits<double>::infinity();
            std::size_t best_index = 0;
            for (std::size_t d = 0; d < model.size(); ++d) {
                const double surface = (p - model.centers[d]).norm() - model.radii[d];
                if (surface < best) {
                    best = surface;
                    best_index = d;
                }
            }
            if (best <= cutoff)
                ++out.counts[best_index];
            else
                ++out.unassigned;
        }
    }
    return out;
}

std::vector<bool> label_visibility(const std::vector<int>& counts, int tau_pix) {
    if (tau_pix < 1) throw std::invalid_argument("label_visibility: tau_pix must be >= 1");
    std::vector<bool> visible;
    visible.reserve(counts.size());
    for (int c : counts) visible.push_back(c >= tau_pix);
    return visible;
}

namespace {

constexpr std::array<char, 8> kDepthMagic = {'H', 'M', 'D', 'N', 'D', 'E', 'P', '\0'};

template <typename UInt>
void put_le(std::ostream& out, UInt v) {
    std::array<char, sizeof(UInt)> bytes;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes.data(), bytes.size());
}

template <typename UInt>
UInt get_le(std::istream& in) {
    std::array<unsigned char, sizeof(UInt)> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
    if (!in) throw std::runtime_error("depth file truncated");
    UInt v = 0;
    for (std::size_t i = sizeof(UInt); i-- > 0;) v = static_cast<UInt>((v << 8) | bytes[i]);
    return v;
}

}  // namespace

void write_depth(std::ostream& out, const DepthImage& img) {
    validate(img);
    out.write(kDepthMagic.data(), kDepthMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.width));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.height));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(img.intrinsics.projection));
    for (double v : {img.intrinsics.fx, img.intrinsics.fy, img.intrinsics.cx, img.intrinsics.cy})
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    for (float d : img.depths) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(d));
    if (!out) throw std::runtime_error("depth write failed");
}

DepthImage read_depth(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kDepthMagic) throw std::runtime_error("not an HMDN depth file");
    DepthImage img;
    img.width = static_cast<int>(get_le<std::uint32_t>(in));
    img.height = static_cast<int>(get_le<std::uint32_t>(in));
    const auto projection = get_le<std::uint32_t>(in);
    if (projection > 1) throw std::runtime_error("depth file: bad projection code");
    img.intrinsics.projection = static_cast<Projection>(projection);
    img.intrinsics.fx = std::bit_cast<double>(get_le<std::uint64_t>(in));
    img.intrinsics.fy = std::bit_cast<double>(get_le<std::uint64_t>(in));
    img.intrinsics.cx = std::bit_cast<double>(get_le<std::uint64_t>(in));
    img.intrinsics.cy = std::bit_cast<double>(get_le<std::uint64_t>(in));
    if (img.width > 1 << 16 || img.height > 1 << 16) throw std::runtime_error("depth file: implausible size");
    img.depths.resize(static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height));
    for (auto& d : img.depths) d = std::bit_cast<float>(get_le<std::uint32_t>(in));
    validate(img);
    return img;
}

void save_depth(const std::filesystem::path& path, const DepthImage& img) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    write_depth(out, img);
}

DepthImage load_depth(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_depth(in);
}

void export_pgm(const std::filesystem::path& path, const DepthImage& img, double scale) {
    validate(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    for (float d : img.depths) {
        const double scaled = std::min(65535.0, std::round(static_cast<double>(d) * scale));
        const auto value = static_cast<std::uint16_t>(scaled);
        // PGM stores 16-bit samples most significant byte first.
        out.put(static_cast<char>(value >> 8));
        out.put(static_cast<char>(value & 0xff));
    }
}

}  // namespace hmdn
