#include "hmdn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "hmdn/net.h"

namespace hmdn {

namespace {

constexpr std::uint64_t kHeadStream = 11;
constexpr std::uint64_t kWeightStream = 12;

double rel_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

std::size_t mode_index(ModelMode mode) { return static_cast<std::size_t>(mode); }

// Labels scattered around the origin; visible joints get one label, occluded
// joints one to three.
std::vector<JointLabelSet> random_labels(int joints, int dim, Rng& rng) {
    std::vector<JointLabelSet> out(static_cast<std::size_t>(joints));
    for (auto& set : out) {
        set.visible = rng.bernoulli(0.5);
        const std::size_t count = set.visible ? 1 : 1 + rng.below(3);
        for (std::size_t m = 0; m < count; ++m) {
            Point y(dim);
            for (int k = 0; k < dim; ++k) y[k] = rng.uniform(-1.5, 1.5);
            set.labels.push_back(y);
        }
    }
    return out;
}

double head_loss(const Eigen::VectorXd& raw, const HeadLayout& layout, const Floors& floors,
                 const std::vector<JointLabelSet>& labels, ModelMode mode) {
    const auto params = decode_head(raw, layout, floors);
    double total = 0.0;
    for (std::size_t d = 0; d < params.size(); ++d) total += item_loss(params[d], labels[d], mode);
    return total;
}

GradCheckRow check_head(ModelMode mode, const GradCheckOptions& options) {
    Rng rng(Rng::split(Rng::split(options.seed, kHeadStream), mode_index(mode)));
    const HeadLayout layout{2, 2, 3};
    const Floors floors;
    GradCheckRow row{"head", mode, options.draws, 0, 0.0, options.head_tolerance, true};
    for (int draw = 0; draw < options.draws; ++draw) {
        Eigen::VectorXd raw(layout.width());
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = rng.normal(0.0, 1.0);
        const auto labels = random_labels(layout.joints, layout.dim, rng);

        const auto params = decode_head(raw, layout, floors);
        std::vector<HmdnGrad> grads;
        for (std::size_t d = 0; d < params.size(); ++d)
            grads.push_back(grad_item_loss(params[d], labels[d], mode));
        Eigen::VectorXd analytic = head_backward(raw, layout, floors, params, grads);
        if (options.sabotage) analytic = -analytic;

        for (Eigen::Index i = 0; i < raw.size(); ++i) {
            Eigen::VectorXd plus = raw, minus = raw;
            plus[i] += options.step;
            minus[i] -= options.step;
            const double numeric = (head_loss(plus, layout, floors, labels, mode) -
                                    head_loss(minus, layout, floors, labels, mode)) /
                                   (2.0 * options.step);
            row.max_rel_error = std::max(row.max_rel_error, rel_error(analytic[i], numeric));
            ++row.coordinates;
        }
    }
    row.pass = row.max_rel_error < row.tolerance;
    return row;
}

double model_loss(const MlpModel& model, const TrainingExample& example) {
    return example_loss(model, forward(model, example.input), example).loss;
}

// True when some hidden pre-activation sits close enough to the rectifier
// kink for a central difference to straddle it.
bool near_kink(const MlpModel& model, const Eigen::VectorXd& x) {
    const ForwardCache cache = forward(model, x);
    for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l)
        if ((cache.pre[l].array().abs() < 1e-4).any()) return true;
    return false;
}

GradCheckRow check_weights(ModelMode mode, const GradCheckOptions& options) {
    Rng rng(Rng::split(Rng::split(options.seed, kWeightStream), mode_index(mode)));
    const HeadLayout layout{2, 2, 2};
    TrainConfig config;
    config.mode = mode;
    config.components = layout.components;
    config.hidden = {6, 5};
    config.sgn_multi_label = MultiLabelPolicy::all;
    GradCheckRow row{"weights", mode, options.draws, 0, 0.0, options.weight_tolerance, true};
    for (int draw = 0; draw < options.draws; ++draw) {
        MlpModel model = MlpModel::create(3, layout, config, rng);
        for (auto& layer : model.layers)
            for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.normal(0.0, 0.3);

        TrainingExample example;
        do {
            example.input = Eigen::VectorXd(3);
            for (int k = 0; k < 3; ++k) example.input[k] = rng.uniform(-1.0, 1.0);
        } while (near_kink(model, example.input));
        example.joints = random_labels(layout.joints, layout.dim, rng);

        MlpGrads analytic = zero_grads_like(model);
        example_loss_and_grads(model, example, analytic);
        const double sign = options.sabotage ? -1.0 : 1.0;

        auto probe = [&](double& value, double expected) {
            const double saved = value;
            value = saved + options.step;
            const double up = model_loss(model, example);
            value = saved - options.step;
            const double down = model_loss(model, example);
            value = saved;
            const double numeric = (up - down) / (2.0 * options.step);
            row.max_rel_error = std::max(row.max_rel_error, rel_error(sign * expected, numeric));
            ++row.coordinates;
        };
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto& layer = model.layers[l];
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
                    probe(layer.weight(r, c), analytic[l].weight(r, c));
            for (Eigen::Index r = 0; r < layer.bias.size(); ++r) probe(layer.bias[r], analytic[l].bias[r]);
        }
    }
    row.pass = row.max_rel_error < row.tolerance;
    return row;
}

}  // namespace

bool GradCheckReport::pass() const {
    return !rows.empty() && std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.pass; });
}

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
    if (options.draws < 1) throw std::invalid_argument("gradcheck: draws must be >= 1");
    if (!(options.step > 0.0)) throw std::invalid_argument("gradcheck: step must be positive");
    GradCheckReport report;
    for (ModelMode mode : options.modes) report.rows.push_back(check_head(mode, options));
    for (ModelMode mode : options.modes) report.rows.push_back(check_weights(mode, options));
    return report;
}

void write_gradcheck_csv(std::ostream& out, const GradCheckReport& report) {
    out << "suite,mode,draws,coordinates,max_rel_error,tolerance,pass\n";
    for (const auto& r : report.rows)
        out << r.suite << ',' << to_string(r.mode) << ',' << r.draws << ',' << r.coordinates << ','
            << r.max_rel_error << ',' << r.tolerance << ',' << (r.pass ? "true" : "false") << '\n';
}

}  // namespace hmdn
