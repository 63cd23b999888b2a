// Binary model file, all fields little-endian:
//
//   magic          8 bytes  "HMDNMDL\0"
//   version        u32      1
//   mode           u32      0 sgn, 1 mdn, 2 hmdn-hard, 3 hmdn-soft
//   D, P, J        u32 x3
//   n_dims         u32      number of entries in layer_dims
//   layer_dims     u32 x n_dims
//   s_floor, eps_w f64 x2
//   train config   u32 epochs, u32 batch_size, f64 lr, f64 beta1, f64 beta2,
//                  f64 eps_adam, u64 seed, u32 sgn_multi_label, u32 average_labels,
//                  u32 n_hidden, u32 x n_hidden
//   weights        per layer: weight (out x in, row-major) f64, then bias f64
//
// See docs/FORMATS.md.

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "hmdn/net.h"

namespace hmdn {

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'M', 'D', 'N', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<char, 8> bytes;
    for (int i = 0; i < 8; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes.data(), 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    std::array<char, 4> bytes;
    for (int i = 0; i < 4; ++i) bytes[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(bytes.data(), 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    if (!in) throw std::runtime_error("model file truncated");
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 4);
    if (!in) throw std::runtime_error("model file truncated");
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[static_cast<std::size_t>(i)];
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

std::uint32_t mode_code(ModelMode m) { return static_cast<std::uint32_t>(m); }

ModelMode mode_from_code(std::uint32_t code) {
    if (code > 3) throw std::runtime_error("model file: bad mode code");
    return static_cast<ModelMode>(code);
}

}  // namespace

void write_model(std::ostream& out, const MlpModel& model) {
    out.write(kMagic.data(), kMagic.size());
    put_u32(out, kVersion);
    put_u32(out, mode_code(model.mode));
    put_u32(out, static_cast<std::uint32_t>(model.head.joints));
    put_u32(out, static_cast<std::uint32_t>(model.head.dim));
    put_u32(out, static_cast<std::uint32_t>(model.head.components));
    put_u32(out, static_cast<std::uint32_t>(model.layer_dims.size()));
    for (int d : model.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
    put_f64(out, model.floors.s_floor);
    put_f64(out, model.floors.eps_w);

    const auto& c = model.config;
    put_u32(out, static_cast<std::uint32_t>(c.epochs));
    put_u32(out, static_cast<std::uint32_t>(c.batch_size));
    put_f64(out, c.lr);
    put_f64(out, c.beta1);
    put_f64(out, c.beta2);
    put_f64(out, c.eps_adam);
    put_u64(out, c.seed);
    put_u32(out, static_cast<std::uint32_t>(c.sgn_multi_label));
    put_u32(out, c.average_labels ? 1u : 0u);
    put_u32(out, static_cast<std::uint32_t>(c.hidden.size()));
    for (int h : c.hidden) put_u32(out, static_cast<std::uint32_t>(h));

    for (const auto& layer : model.layers) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
            for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) put_f64(out, layer.weight(r, col));
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) put_f64(out, layer.bias[r]);
    }
    if (!out) throw std::runtime_error("model write failed");
}

MlpModel read_model(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw std::runtime_error("not an HMDN model file");
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) throw std::runtime_error("unsupported model file version " + std::to_string(version));

    MlpModel model;
    model.mode = mode_from_code(get_u32(in));
    model.head.joints = static_cast<int>(get_u32(in));
    model.head.dim = static_cast<int>(get_u32(in));
    model.head.components = static_cast<int>(get_u32(in));
    const std::uint32_t n_dims = get_u32(in);
    if (n_dims < 2 || n_dims > 1024) throw std::runtime_error("model file: bad layer count");
    for (std::uint32_t i = 0; i < n_dims; ++i) model.layer_dims.push_back(static_cast<int>(get_u32(in)));
    if (model.layer_dims.back() != model.head.width())
        throw std::runtime_error("model file: output width does not match head layout");
    model.floors.s_floor = get_f64(in);
    model.floors.eps_w = get_f64(in);

    auto& c = model.config;
    c.epochs = static_cast<int>(get_u32(in));
    c.batch_size = static_cast<int>(get_u32(in));
    c.lr = get_f64(in);
    c.beta1 = get_f64(in);
    c.beta2 = get_f64(in);
    c.eps_adam = get_f64(in);
    c.seed = get_u64(in);
    const std::uint32_t policy = get_u32(in);
    if (policy > 2) throw std::runtime_error("model file: bad label policy");
    c.sgn_multi_label = static_cast<MultiLabelPolicy>(policy);
    c.average_labels = get_u32(in) != 0;
    const std::uint32_t n_hidden = get_u32(in);
    if (n_hidden > 1024) throw std::runtime_error("model file: bad hidden count");
    c.hidden.clear();
    for (std::uint32_t i = 0; i < n_hidden; ++i) c.hidden.push_back(static_cast<int>(get_u32(in)));
    c.mode = model.mode;
    c.components = model.head.components;
    c.floors = model.floors;

    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
        const int fan_in = model.layer_dims[l];
        const int fan_out = model.layer_dims[l + 1];
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd(fan_out)};
        for (int r = 0; r < fan_out; ++r)
            for (int col = 0; col < fan_in; ++col) layer.weight(r, col) = get_f64(in);
        for (int r = 0; r < fan_out; ++r) layer.bias[r] = get_f64(in);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

void save_model(const std::filesystem::path& path, const MlpModel& model) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_model(out, model);
}

MlpModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model " + path.string());
    return read_model(in);
}

}  // namespace hmdn
