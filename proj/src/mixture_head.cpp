#include "hmdn/mixture_head.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hmdn {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;  // log(2 pi)

bool all_finite(const Point& p) { return p.allFinite(); }

void require(bool condition, const char* message) {
    if (!condition) throw std::invalid_argument(message);
}

// log(pi_j) + log N(y; eps_j, s_j) for every component, plus the shifted total.
struct GmmTerms {
    std::vector<double> log_density;  // log N_j
    double log_total = -std::numeric_limits<double>::infinity();
};

GmmTerms gmm_terms(const Point& y, std::span<const MixtureComponent> comps) {
    require(!comps.empty(), "gmm: no components");
    GmmTerms terms;
    terms.log_density.resize(comps.size());
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> weighted(comps.size());
    for (std::size_t j = 0; j < comps.size(); ++j) {
        const auto& c = comps[j];
        require(c.weight >= 0.0 && std::isfinite(c.weight), "gmm: mixing weight must be finite and >= 0");
        terms.log_density[j] = log_normal_iso(y, c.center, c.stddev);
        weighted[j] = c.weight > 0.0 ? std::log(c.weight) + terms.log_density[j]
                                     : -std::numeric_limits<double>::infinity();
        max_term = std::max(max_term, weighted[j]);
    }
    require(max_term > -std::numeric_limits<double>::infinity(), "gmm: all mixing weights are zero");
    double acc = 0.0;
    for (double t : weighted) acc += std::exp(t - max_term);
    terms.log_total = max_term + std::log(acc);
    return terms;
}

// Adds scale * d(-log N(y; mu, sigma))/d(mu, sigma).
void accumulate_unimodal_nll_grad(const Point& y, const Point& mu, double sigma, double scale,
                                  Point& dmu, double& dsigma) {
    const Point diff = y - mu;
    const double r2 = diff.squaredNorm();
    const double p = static_cast<double>(y.size());
    const double s2 = sigma * sigma;
    dmu -= (scale / s2) * diff;
    dsigma += scale * (p / sigma - r2 / (s2 * sigma));
}

// Adds scale * d(-log GMM(y))/d(comps) into `dcomps` (same layout).
void accumulate_gmm_nll_grad(const Point& y, std::span<const MixtureComponent> comps,
                             const GmmTerms& terms, double scale,
                             std::vector<MixtureComponent>& dcomps) {
    const double p = static_cast<double>(y.size());
    for (std::size_t j = 0; j < comps.size(); ++j) {
        const auto& c = comps[j];
        // N_j / sum_k pi_k N_k; gamma_j = pi_j times this.
        const double ratio = std::exp(terms.log_density[j] - terms.log_total);
        const double gamma = c.weight * ratio;
        const Point diff = y - c.center;
        const double s2 = c.stddev * c.stddev;
        dcomps[j].weight -= scale * ratio;
        dcomps[j].center -= (scale * gamma / s2) * diff;
        dcomps[j].stddev += scale * gamma * (p / c.stddev - diff.squaredNorm() / (s2 * c.stddev));
    }
}

}  // namespace

HmdnGrad zero_grad_like(const HmdnJointParams& params) {
    HmdnGrad g;
    g.w = 0.0;
    g.mu = Point::Zero(params.mu.size());
    g.sigma = 0.0;
    g.comps.resize(params.comps.size());
    for (std::size_t j = 0; j < params.comps.size(); ++j) {
        g.comps[j].weight = 0.0;
        g.comps[j].center = Point::Zero(params.comps[j].center.size());
        g.comps[j].stddev = 0.0;
    }
    return g;
}

void validate(const HmdnJointParams& params) {
    require(params.mu.size() >= 1, "params: dimension P must be >= 1");
    require(params.w > 0.0 && params.w < 1.0, "params: w must lie in (0, 1)");
    require(all_finite(params.mu), "params: mu must be finite");
    require(std::isfinite(params.sigma) && params.sigma > 0.0, "params: sigma must be positive");
    require(!params.comps.empty(), "params: J must be >= 1");
    double total = 0.0;
    for (const auto& c : params.comps) {
        require(c.center.size() == params.mu.size(), "params: component dimension mismatch");
        require(all_finite(c.center), "params: component center must be finite");
        require(std::isfinite(c.stddev) && c.stddev > 0.0, "params: component stddev must be positive");
        require(std::isfinite(c.weight) && c.weight >= 0.0, "params: mixing weight must be >= 0");
        total += c.weight;
    }
    require(std::abs(total - 1.0) <= 1e-9, "params: mixing weights must sum to 1");
}

void validate(const JointLabelSet& labelset, std::size_t dim) {
    require(!labelset.labels.empty(), "labels: label set is empty");
    require(!labelset.visible || labelset.labels.size() == 1, "labels: visible joint must have exactly one label");
    for (const auto& y : labelset.labels) {
        require(static_cast<std::size_t>(y.size()) == dim, "labels: dimension mismatch");
        require(all_finite(y), "labels: non-finite label");
    }
}

double log_normal_iso(const Point& y, const Point& mu, double sigma) {
    require(y.size() == mu.size() && y.size() >= 1, "log_normal_iso: dimension mismatch");
    require(all_finite(y) && all_finite(mu) && std::isfinite(sigma), "log_normal_iso: non-finite input");
    require(sigma > 0.0, "log_normal_iso: sigma must be positive");
    const double p = static_cast<double>(y.size());
    const double r2 = (y - mu).squaredNorm();
    return -0.5 * p * kLogTwoPi - p * std::log(sigma) - r2 / (2.0 * sigma * sigma);
}

double gmm_log_pdf(const Point& y, std::span<const MixtureComponent> comps) {
    return gmm_terms(y, comps).log_total;
}

double cond_log_pdf(const HmdnJointParams& params, const Point& y, bool visible) {
    return visible ? log_normal_iso(y, params.mu, params.sigma) : gmm_log_pdf(y, params.comps);
}

double joint_log_pdf(const HmdnJointParams& params, const Point& y, bool visible) {
    require(params.w > 0.0 && params.w < 1.0, "joint_log_pdf: w must lie in (0, 1)");
    return (visible ? std::log(params.w) : std::log1p(-params.w)) + cond_log_pdf(params, y, visible);
}

double marginal_log_pdf(const HmdnJointParams& params, const Point& y) {
    const double a = std::log(params.w) + log_normal_iso(y, params.mu, params.sigma);
    const double b = std::log1p(-params.w) + gmm_log_pdf(y, params.comps);
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double loss_vis(double w, bool visible) {
    require(w > 0.0 && w < 1.0, "loss_vis: w must lie in (0, 1)");
    return visible ? -std::log(w) : -std::log1p(-w);
}

double loss_location_hard(const HmdnJointParams& params, const Point& y, bool visible) {
    return -cond_log_pdf(params, y, visible);
}

double loss_location_soft(const HmdnJointParams& params, const Point& y) {
    const double single = -log_normal_iso(y, params.mu, params.sigma);
    const double multi = -gmm_log_pdf(y, params.comps);
    return params.w * single + (1.0 - params.w) * multi;
}

double item_loss(const HmdnJointParams& params, const JointLabelSet& labelset, ModelMode mode) {
    validate(labelset, params.dim());
    double total = 0.0;
    switch (mode) {
    case ModelMode::sgn:
        for (const auto& y : labelset.labels) total -= log_normal_iso(y, params.mu, params.sigma);
        break;
    case ModelMode::mdn: {
        const auto degraded = degrade_to_mdn(params);
        for (const auto& y : labelset.labels) total -= gmm_log_pdf(y, degraded);
        break;
    }
    case ModelMode::hmdn_hard:
        for (const auto& y : labelset.labels)
            total += loss_vis(params.w, labelset.visible) + loss_location_hard(params, y, labelset.visible);
        break;
    case ModelMode::hmdn_soft:
        for (const auto& y : labelset.labels)
            total += loss_vis(params.w, labelset.visible) + loss_location_soft(params, y);
        break;
    }
    return total;
}

double total_loss(std::span<const std::vector<HmdnJointParams>> params,
                  std::span<const std::vector<JointLabelSet>> labels, LossMode mode,
                  const LossOptions& options) {
    require(params.size() == labels.size(), "total_loss: example count mismatch");
    const ModelMode model_mode = mode == LossMode::hard ? ModelMode::hmdn_hard : ModelMode::hmdn_soft;
    double total = 0.0;
    for (std::size_t n = 0; n < params.size(); ++n) {
        require(params[n].size() == labels[n].size(), "total_loss: joint count mismatch");
        for (std::size_t d = 0; d < params[n].size(); ++d) {
            double term = item_loss(params[n][d], labels[n][d], model_mode);
            if (options.average_labels) term /= static_cast<double>(labels[n][d].labels.size());
            total += term;
        }
    }
    if (options.mean_over_examples && !params.empty()) total /= static_cast<double>(params.size());
    return total;
}

HmdnGrad grad_loss(const HmdnJointParams& params, const JointLabelSet& labelset, LossMode mode) {
    validate(params);
    validate(labelset, params.dim());
    HmdnGrad g = zero_grad_like(params);
    const double w = params.w;
    for (const auto& y : labelset.labels) {
        g.w += labelset.visible ? -1.0 / w : 1.0 / (1.0 - w);
        if (mode == LossMode::hard) {
            if (labelset.visible) {
                accumulate_unimodal_nll_grad(y, params.mu, params.sigma, 1.0, g.mu, g.sigma);
            } else {
                const auto terms = gmm_terms(y, params.comps);
                accumulate_gmm_nll_grad(y, params.comps, terms, 1.0, g.comps);
            }
        } else {
            const double log_single = log_normal_iso(y, params.mu, params.sigma);
            const auto terms = gmm_terms(y, params.comps);
            g.w += terms.log_total - log_single;
            accumulate_unimodal_nll_grad(y, params.mu, params.sigma, w, g.mu, g.sigma);
            accumulate_gmm_nll_grad(y, params.comps, terms, 1.0 - w, g.comps);
        }
    }
    return g;
}

HmdnGrad grad_item_loss(const HmdnJointParams& params, const JointLabelSet& labelset,
                        ModelMode mode) {
    switch (mode) {
    case ModelMode::hmdn_hard: return grad_loss(params, labelset, LossMode::hard);
    case ModelMode::hmdn_soft: return grad_loss(params, labelset, LossMode::soft);
    case ModelMode::sgn: {
        validate(labelset, params.dim());
        HmdnGrad g = zero_grad_like(params);
        for (const auto& y : labelset.labels)
            accumulate_unimodal_nll_grad(y, params.mu, params.sigma, 1.0, g.mu, g.sigma);
        return g;
    }
    case ModelMode::mdn: {
        validate(params);
        validate(labelset, params.dim());
        const auto degraded = degrade_to_mdn(params);
        HmdnJointParams shape;
        shape.mu = params.mu;
        shape.comps = degraded;
        auto dcomps = zero_grad_like(shape).comps;
        for (const auto& y : labelset.labels)
            accumulate_gmm_nll_grad(y, degraded, gmm_terms(y, degraded), 1.0, dcomps);

        const std::size_t J = params.comps.size();
        HmdnGrad g = zero_grad_like(params);
        double dw = dcomps[J].weight;
        for (std::size_t j = 0; j < J; ++j) {
            g.comps[j].weight = (1.0 - params.w) * dcomps[j].weight;
            g.comps[j].center = dcomps[j].center;
            g.comps[j].stddev = dcomps[j].stddev;
            dw -= params.comps[j].weight * dcomps[j].weight;
        }
        g.w = dw;
        g.mu = dcomps[J].center;
        g.sigma = dcomps[J].stddev;
        return g;
    }
    }
    throw std::invalid_argument("grad_item_loss: unknown mode");
}

std::vector<MixtureComponent> degrade_to_mdn(const HmdnJointParams& params) {
    validate(params);
    std::vector<MixtureComponent> out;
    out.reserve(params.comps.size() + 1);
    for (const auto& c : params.comps) out.push_back({(1.0 - params.w) * c.weight, c.center, c.stddev});
    out.push_back({params.w, params.mu, params.sigma});
    return out;
}

namespace {

Point draw_gaussian(const Point& center, double stddev, Rng& rng) {
    Point p(center.size());
    for (Eigen::Index i = 0; i < center.size(); ++i) p[i] = center[i] + stddev * rng.normal();
    return p;
}

std::size_t pick_component(std::span<const MixtureComponent> comps, Rng& rng) {
    double total = 0.0;
    for (const auto& c : comps) total += c.weight;
    const double u = rng.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t j = 0; j < comps.size(); ++j) {
        if (comps[j].weight <= 0.0) continue;
        last_positive = j;
        acc += comps[j].weight;
        if (u < acc) return j;
    }
    return last_positive;
}

}  // namespace

std::vector<Sample> sample_gmm(std::span<const MixtureComponent> comps, std::size_t count, Rng& rng) {
    require(!comps.empty(), "sample_gmm: no components");
    std::vector<Sample> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = pick_component(comps, rng);
        out.push_back({draw_gaussian(comps[j].center, comps[j].stddev, rng), static_cast<int>(j)});
    }
    return out;
}

std::vector<Sample> sample_joint(const HmdnJointParams& params, std::size_t count, Rng& rng,
                                 SampleMode mode) {
    validate(params);
    require(count >= 1, "sample_joint: count must be >= 1");
    std::vector<Sample> out;
    out.reserve(count);
    const bool gated_unimodal = params.w > 0.5;
    for (std::size_t i = 0; i < count; ++i) {
        const bool unimodal = mode == SampleMode::gated ? gated_unimodal : rng.bernoulli(params.w);
        if (unimodal) {
            out.push_back({draw_gaussian(params.mu, params.sigma, rng), kUnimodalBranch});
        } else {
            const std::size_t j = pick_component(params.comps, rng);
            out.push_back({draw_gaussian(params.comps[j].center, params.comps[j].stddev, rng),
                           static_cast<int>(j)});
        }
    }
    return out;
}

std::vector<Sample> sample_model_joint(const HmdnJointParams& params, ModelMode mode,
                                       std::size_t count, Rng& rng) {
    switch (mode) {
    case ModelMode::sgn: {
        std::vector<Sample> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
            out.push_back({draw_gaussian(params.mu, params.sigma, rng), kUnimodalBranch});
        return out;
    }
    case ModelMode::mdn: {
        auto out = sample_gmm(degrade_to_mdn(params), count, rng);
        // Last degraded slot is the unimodal component.
        const int unimodal_slot = static_cast<int>(params.comps.size());
        for (auto& s : out)
            if (s.branch == unimodal_slot) s.branch = kUnimodalBranch;
        return out;
    }
    case ModelMode::hmdn_hard:
    case ModelMode::hmdn_soft:
        return sample_joint(params, count, rng, SampleMode::gated);
    }
    throw std::invalid_argument("sample_model_joint: unknown mode");
}

Point mode_point(const HmdnJointParams& params, ModelMode mode) {
    auto best_center = [](std::span<const MixtureComponent> comps) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < comps.size(); ++j)
            if (comps[j].weight > comps[best].weight) best = j;
        return comps[best].center;
    };
    switch (mode) {
    case ModelMode::sgn: return params.mu;
    case ModelMode::mdn: return best_center(degrade_to_mdn(params));
    case ModelMode::hmdn_hard:
    case ModelMode::hmdn_soft: return params.w > 0.5 ? params.mu : best_center(params.comps);
    }
    throw std::invalid_argument("mode_point: unknown mode");
}

}  // namespace hmdn
