#include "hmdn/net.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hmdn {

namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

double logistic(double a) {
    if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
    const double e = std::exp(a);
    return e / (1.0 + e);
}

}  // namespace

std::vector<HmdnJointParams> decode_head(const Eigen::VectorXd& raw, const HeadLayout& layout,
                                         const Floors& floors) {
    if (raw.size() != layout.width())
        throw std::invalid_argument("decode_head: raw width " + std::to_string(raw.size()) +
                                    " does not match layout width " + std::to_string(layout.width()));
    const int P = layout.dim;
    const int J = layout.components;
    std::vector<HmdnJointParams> out(static_cast<std::size_t>(layout.joints));
    for (int d = 0; d < layout.joints; ++d) {
        auto& p = out[static_cast<std::size_t>(d)];
        p.w = std::clamp(logistic(raw[layout.w_offset(d)]), floors.eps_w, 1.0 - floors.eps_w);
        p.mu = raw.segment(layout.mu_offset(d), P);
        p.sigma = std::exp(std::min(raw[layout.sigma_offset(d)], kMaxLogScale)) + floors.s_floor;

        const auto logits = raw.segment(layout.pi_offset(d), J);
        const double max_logit = logits.maxCoeff();
        Eigen::VectorXd pi = (logits.array() - max_logit).exp();
        pi /= pi.sum();

        p.comps.resize(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            auto& c = p.comps[static_cast<std::size_t>(j)];
            c.weight = pi[j];
            c.center = raw.segment(layout.eps_offset(d, j), P);
            c.stddev = std::exp(std::min(raw[layout.s_offset(d, j)], kMaxLogScale)) + floors.s_floor;
        }
    }
    return out;
}

Eigen::VectorXd head_backward(const Eigen::VectorXd& raw, const HeadLayout& layout,
                              const Floors& floors, std::span<const HmdnJointParams> params,
                              std::span<const HmdnGrad> grads) {
    if (raw.size() != layout.width() || params.size() != static_cast<std::size_t>(layout.joints) ||
        grads.size() != params.size())
        throw std::invalid_argument("head_backward: shape mismatch");
    const int P = layout.dim;
    const int J = layout.components;
    Eigen::VectorXd draw = Eigen::VectorXd::Zero(raw.size());
    auto scale_slope = [&](double raw_value, double decoded) {
        return raw_value < kMaxLogScale ? decoded - floors.s_floor : 0.0;
    };
    for (int d = 0; d < layout.joints; ++d) {
        const auto& p = params[static_cast<std::size_t>(d)];
        const auto& g = grads[static_cast<std::size_t>(d)];

        // Clamped gate has zero slope.
        const double s = logistic(raw[layout.w_offset(d)]);
        const bool clamped = s < floors.eps_w || s > 1.0 - floors.eps_w;
        draw[layout.w_offset(d)] = clamped ? 0.0 : g.w * s * (1.0 - s);

        draw.segment(layout.mu_offset(d), P) = g.mu;
        draw[layout.sigma_offset(d)] = g.sigma * scale_slope(raw[layout.sigma_offset(d)], p.sigma);

        double weighted = 0.0;
        for (int j = 0; j < J; ++j)
            weighted += p.comps[static_cast<std::size_t>(j)].weight * g.comps[static_cast<std::size_t>(j)].weight;
        for (int j = 0; j < J; ++j) {
            const auto& c = p.comps[static_cast<std::size_t>(j)];
            const auto& gc = g.comps[static_cast<std::size_t>(j)];
            draw[layout.pi_offset(d) + j] = c.weight * (gc.weight - weighted);
            draw.segment(layout.eps_offset(d, j), P) = gc.center;
            draw[layout.s_offset(d, j)] = gc.stddev * scale_slope(raw[layout.s_offset(d, j)], c.stddev);
        }
    }
    return draw;
}

MlpModel MlpModel::create(int input_width, const HeadLayout& head, const TrainConfig& config,
                          Rng& rng) {
    if (input_width < 1) throw std::invalid_argument("MlpModel: input width must be >= 1");
    if (head.joints < 1 || head.dim < 1 || head.components < 1)
        throw std::invalid_argument("MlpModel: D, P and J must be >= 1");
    MlpModel model;
    model.head = head;
    model.mode = config.mode;
    model.floors = config.floors;
    model.config = config;
    model.layer_dims.push_back(input_width);
    for (int h : config.hidden) {
        if (h < 1) throw std::invalid_argument("MlpModel: hidden widths must be >= 1");
        model.layer_dims.push_back(h);
    }
    model.layer_dims.push_back(head.width());
    for (std::size_t l = 0; l + 1 < model.layer_dims.size(); ++l) {
        const int fan_in = model.layer_dims[l];
        const int fan_out = model.layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

bool MlpModel::same_weights(const MlpModel& other) const {
    if (layer_dims != other.layer_dims) return false;
    for (std::size_t l = 0; l < layers.size(); ++l)
        if (layers[l].weight != other.layers[l].weight || layers[l].bias != other.layers[l].bias)
            return false;
    return true;
}

ForwardCache forward(const MlpModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_width())
        throw std::invalid_argument("forward: input width " + std::to_string(x.size()) +
                                    " != " + std::to_string(model.input_width()));
    ForwardCache cache;
    cache.model = &model;
    cache.revision = model.revision;
    cache.inputs.reserve(model.layers.size());
    cache.pre.reserve(model.layers.size());
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        cache.inputs.push_back(a);
        Eigen::VectorXd z = layer.weight * a + layer.bias;
        cache.pre.push_back(z);
        a = l + 1 < model.layers.size() ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
    }
    cache.raw = std::move(a);
    return cache;
}

MlpGrads zero_grads_like(const MlpModel& model) {
    MlpGrads g;
    g.reserve(model.layers.size());
    for (const auto& layer : model.layers)
        g.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                     Eigen::VectorXd::Zero(layer.bias.size())});
    return g;
}

void add_into(MlpGrads& acc, const MlpGrads& g) {
    if (acc.size() != g.size()) throw std::invalid_argument("add_into: layer count mismatch");
    for (std::size_t l = 0; l < acc.size(); ++l) {
        acc[l].weight += g[l].weight;
        acc[l].bias += g[l].bias;
    }
}

namespace {

void backward_into(const MlpModel& model, const ForwardCache& cache, const Eigen::VectorXd& draw,
                   MlpGrads& grads) {
    if (cache.model != &model || cache.revision != model.revision ||
        cache.pre.size() != model.layers.size())
        throw std::logic_error("backward: forward cache does not belong to this model state");
    if (draw.size() != model.output_width())
        throw std::invalid_argument("backward: upstream gradient width mismatch");
    Eigen::VectorXd delta = draw;
    for (std::size_t l = model.layers.size(); l-- > 0;) {
        if (l + 1 < model.layers.size())
            delta = (cache.pre[l].array() > 0.0).select(delta, 0.0);
        grads[l].weight.noalias() += delta * cache.inputs[l].transpose();
        grads[l].bias += delta;
        if (l > 0) delta = model.layers[l].weight.transpose() * delta;
    }
}

}  // namespace

MlpGrads backward(const MlpModel& model, const ForwardCache& cache, const Eigen::VectorXd& draw) {
    MlpGrads grads = zero_grads_like(model);
    backward_into(model, cache, draw, grads);
    return grads;
}

std::vector<HmdnJointParams> predict(const MlpModel& model, const Eigen::VectorXd& x) {
    return decode_head(forward(model, x).raw, model.head, model.floors);
}

JointLabelSet training_labels(const JointLabelSet& labels, const TrainConfig& config) {
    if (config.mode != ModelMode::sgn || labels.labels.size() <= 1) return labels;
    switch (config.sgn_multi_label) {
    case MultiLabelPolicy::reject:
        throw std::invalid_argument(
            "sgn training on multi-label joints needs a label policy (all or first)");
    case MultiLabelPolicy::all: return labels;
    case MultiLabelPolicy::first: return JointLabelSet{{labels.labels.front()}, labels.visible};
    }
    return labels;
}

ExampleLoss example_loss(const MlpModel& model, const ForwardCache& cache,
                         const TrainingExample& example) {
    if (example.joints.size() != static_cast<std::size_t>(model.head.joints))
        throw std::invalid_argument("example_loss: joint count mismatch");
    const auto params = decode_head(cache.raw, model.head, model.floors);
    std::vector<HmdnGrad> grads;
    grads.reserve(params.size());
    ExampleLoss out;
    for (std::size_t d = 0; d < params.size(); ++d) {
        const JointLabelSet labels = training_labels(example.joints[d], model.config);
        double loss = item_loss(params[d], labels, model.mode);
        HmdnGrad g = grad_item_loss(params[d], labels, model.mode);
        if (model.config.average_labels) {
            const double inv = 1.0 / static_cast<double>(labels.labels.size());
            loss *= inv;
            g.w *= inv;
            g.mu *= inv;
            g.sigma *= inv;
            for (auto& c : g.comps) {
                c.weight *= inv;
                c.center *= inv;
                c.stddev *= inv;
            }
        }
        out.loss += loss;
        grads.push_back(std::move(g));
    }
    out.draw = head_backward(cache.raw, model.head, model.floors, params, grads);
    return out;
}

double example_loss_and_grads(const MlpModel& model, const TrainingExample& example,
                              MlpGrads& grads_out) {
    const ForwardCache cache = forward(model, example.input);
    const ExampleLoss el = example_loss(model, cache, example);
    backward_into(model, cache, el.draw, grads_out);
    return el.loss;
}

double dataset_loss(const MlpModel& model, const Dataset& dataset) {
    double total = 0.0;
    for (const auto& ex : dataset.examples) {
        const auto params = predict(model, ex.input);
        for (std::size_t d = 0; d < params.size(); ++d) {
            const JointLabelSet labels = training_labels(ex.joints[d], model.config);
            double loss = item_loss(params[d], labels, model.mode);
            if (model.config.average_labels) loss /= static_cast<double>(labels.labels.size());
            total += loss;
        }
    }
    return total;
}

AdamState AdamState::for_model(const MlpModel& model, const TrainConfig& config) {
    AdamState state;
    state.first = zero_grads_like(model);
    state.second = zero_grads_like(model);
    state.lr = config.lr;
    state.beta1 = config.beta1;
    state.beta2 = config.beta2;
    state.eps = config.eps_adam;
    return state;
}

void adam_step(MlpModel& model, AdamState& state, const MlpGrads& grads) {
    const std::size_t n = model.layers.size();
    if (grads.size() != n || state.first.size() != n || state.second.size() != n)
        throw std::invalid_argument("adam_step: layer count mismatch");
    for (std::size_t l = 0; l < n; ++l) {
        const auto& layer = model.layers[l];
        for (const DenseLayer* other : {&grads[l], static_cast<const DenseLayer*>(&state.first[l]), static_cast<const DenseLayer*>(&state.second[l])}) {
            if (other->weight.rows() != layer.weight.rows() || other->weight.cols() != layer.weight.cols() ||
                other->bias.size() != layer.bias.size())
                throw std::invalid_argument("adam_step: shape mismatch in layer " + std::to_string(l));
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correct1 = 1.0 - std::pow(state.beta1, t);
    const double correct2 = 1.0 - std::pow(state.beta2, t);
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
        param.array() -= state.lr * (m.array() / correct1) / ((v.array() / correct2).sqrt() + state.eps);
    };
    for (std::size_t l = 0; l < n; ++l) {
        update(model.layers[l].weight, state.first[l].weight, state.second[l].weight, grads[l].weight);
        update(model.layers[l].bias, state.first[l].bias, state.second[l].bias, grads[l].bias);
    }
    ++model.revision;
}

void check_trainable(const Dataset& dataset, const TrainConfig& config) {
    if (dataset.examples.empty()) throw std::invalid_argument("train: dataset is empty");
    if (config.epochs < 1 || config.batch_size < 1 || config.components < 1)
        throw std::invalid_argument("train: epochs, batch size and J must be positive");
    if (!(config.lr >= 0.0)) throw std::invalid_argument("train: learning rate must be >= 0");
    const auto& first = dataset.examples.front();
    for (const auto& ex : dataset.examples) {
        if (ex.input.size() != first.input.size() || ex.joints.size() != first.joints.size())
            throw std::invalid_argument("train: inconsistent example shapes");
        for (const auto& j : ex.joints) {
            validate(j, static_cast<std::size_t>(first.joints.front().labels.front().size()));
            if (config.mode == ModelMode::sgn && j.labels.size() > 1 &&
                config.sgn_multi_label == MultiLabelPolicy::reject)
                throw std::invalid_argument(
                    "mode sgn cannot train on multi-label joints without a label policy "
                    "(set sgn_multi_label to all or first)");
        }
    }
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
    check_trainable(dataset, config);
    const auto& first = dataset.examples.front();
    const HeadLayout head{static_cast<int>(first.joints.size()),
                          static_cast<int>(first.joints.front().labels.front().size()),
                          config.components};
    Rng init_rng = Rng::stream(config.seed, kInitStream);
    Rng shuffle_rng = Rng::stream(config.seed, kShuffleStream);

    TrainResult result{MlpModel::create(static_cast<int>(first.input.size()), head, config, init_rng), {}};
    MlpModel& model = result.model;
    AdamState adam = AdamState::for_model(model, config);

    const std::size_t n = dataset.examples.size();
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    MlpGrads grads = zero_grads_like(model);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates with the portable generator.
        for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t stop = std::min(n, start + batch);
            for (auto& g : grads) {
                g.weight.setZero();
                g.bias.setZero();
            }
            for (std::size_t i = start; i < stop; ++i)
                epoch_loss += example_loss_and_grads(model, dataset.examples[order[i]], grads);
            adam_step(model, adam, grads);
        }
        result.loss_trace.push_back(epoch_loss);
    }
    return result;
}

std::string to_string(ModelMode mode) {
    switch (mode) {
    case ModelMode::sgn: return "sgn";
    case ModelMode::mdn: return "mdn";
    case ModelMode::hmdn_hard: return "hmdn-hard";
    case ModelMode::hmdn_soft: return "hmdn-soft";
    }
    return "?";
}

ModelMode parse_model_mode(const std::string& text) {
    if (text == "sgn") return ModelMode::sgn;
    if (text == "mdn") return ModelMode::mdn;
    if (text == "hmdn-hard" || text == "hard" || text == "hmdn") return ModelMode::hmdn_hard;
    if (text == "hmdn-soft" || text == "soft") return ModelMode::hmdn_soft;
    throw std::invalid_argument("unknown mode '" + text + "' (expected sgn|mdn|hmdn-hard|hmdn-soft)");
}

std::string to_string(MultiLabelPolicy policy) {
    switch (policy) {
    case MultiLabelPolicy::reject: return "reject";
    case MultiLabelPolicy::all: return "all";
    case MultiLabelPolicy::first: return "first";
    }
    return "?";
}

MultiLabelPolicy parse_multi_label_policy(const std::string& text) {
    if (text == "reject") return MultiLabelPolicy::reject;
    if (text == "all") return MultiLabelPolicy::all;
    if (text == "first") return MultiLabelPolicy::first;
    throw std::invalid_argument("unknown multi-label policy '" + text + "' (expected reject|all|first)");
}

}  // namespace hmdn
