#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hmdn/rng.h"

namespace hmdn {

using Point = Eigen::VectorXd;

/// Numerical floors applied by the activation head.
struct Floors {
    double s_floor = 1e-4;  ///< lower bound on sigma and every s_j (target units)
    double eps_w = 1e-6;    ///< w is clamped to [eps_w, 1 - eps_w]

    bool operator==(const Floors&) const = default;
};

/// One isotropic Gaussian component of a mixture.
struct MixtureComponent {
    double weight = 0.0;  ///< pi_j
    Point center;         ///< eps_j
    double stddev = 1.0;  ///< s_j
};

/// Per-joint distribution parameters emitted by the network head.
///
/// The visibility gate w selects between a unimodal Gaussian N(mu, sigma I)
/// for visible joints and a J-component isotropic GMM for occluded ones.
struct HmdnJointParams {
    double w = 0.5;
    Point mu;
    double sigma = 1.0;
    std::vector<MixtureComponent> comps;

    std::size_t dim() const { return static_cast<std::size_t>(mu.size()); }
    std::size_t num_components() const { return comps.size(); }
};

/// Gradient of a per-item loss with respect to each constrained parameter.
/// Shares the layout of HmdnJointParams; comps[j].weight holds dL/dpi_j.
using HmdnGrad = HmdnJointParams;

/// Zero-valued gradient with the same shape as `params`.
HmdnGrad zero_grad_like(const HmdnJointParams& params);

/// Label set of one joint of one example.
struct JointLabelSet {
    std::vector<Point> labels;
    bool visible = false;
};

enum class LossMode { hard, soft };

/// How a whole-model distribution is queried at test time or during training.
///   sgn       - unimodal Gaussian only (w and comps ignored)
///   mdn       - the (J+1)-component GMM from degrade_to_mdn, no visibility
///   hmdn_hard - hierarchical, binary visibility labels pick the branch
///   hmdn_soft - hierarchical, predicted w weights both branches
enum class ModelMode { sgn, mdn, hmdn_hard, hmdn_soft };

enum class SampleMode { gated, generative };

/// Branch a sample came from: -1 for the unimodal Gaussian, otherwise the
/// index of the mixture component.
inline constexpr int kUnimodalBranch = -1;

struct Sample {
    Point point;
    int branch = kUnimodalBranch;
};

// --- validation ------------------------------------------------------------

/// Throws std::invalid_argument when `params` break the HmdnJointParams
/// invariants (w in (0,1), positive scales, pi on the simplex, consistent P).
void validate(const HmdnJointParams& params);
void validate(const JointLabelSet& labelset, std::size_t dim);

// --- densities -------------------------------------------------------------

/// log N(y; mu, sigma^2 I).
double log_normal_iso(const Point& y, const Point& mu, double sigma);

/// log sum_j pi_j N(y; eps_j, s_j^2 I) via max-shifted log-sum-exp.
double gmm_log_pdf(const Point& y, std::span<const MixtureComponent> comps);

/// log p(y | v): the unimodal branch when visible, the GMM otherwise.
double cond_log_pdf(const HmdnJointParams& params, const Point& y, bool visible);

/// log p(y, v) = log w + log N(...) when visible, log(1-w) + log GMM otherwise.
double joint_log_pdf(const HmdnJointParams& params, const Point& y, bool visible);

/// log [w N(y; mu, sigma) + (1-w) GMM(y)], the visibility-marginalized density.
double marginal_log_pdf(const HmdnJointParams& params, const Point& y);

// --- losses ----------------------------------------------------------------

double loss_vis(double w, bool visible);
double loss_location_hard(const HmdnJointParams& params, const Point& y, bool visible);
double loss_location_soft(const HmdnJointParams& params, const Point& y);

/// Loss of one joint under `mode`, summed over every label of the set.
/// hmdn modes include the visibility term once per label.
double item_loss(const HmdnJointParams& params, const JointLabelSet& labelset, ModelMode mode);

struct LossOptions {
    /// Divide each joint's label sum by its label count.
    bool average_labels = false;
    /// Divide the total by the number of examples.
    bool mean_over_examples = false;
};

/// Sum over examples, joints and labels of L_vis + location loss.
/// `params[n][d]` pairs with `labels[n][d]`.
double total_loss(std::span<const std::vector<HmdnJointParams>> params,
                  std::span<const std::vector<JointLabelSet>> labels, LossMode mode,
                  const LossOptions& options = {});

// --- gradients -------------------------------------------------------------

/// d(item loss)/d(params) for the hierarchical losses (visibility + location,
/// summed over labels). GMM terms use responsibilities.
HmdnGrad grad_loss(const HmdnJointParams& params, const JointLabelSet& labelset, LossMode mode);

/// Gradient for any ModelMode; hmdn modes forward to grad_loss.
HmdnGrad grad_item_loss(const HmdnJointParams& params, const JointLabelSet& labelset,
                        ModelMode mode);

// --- degradation -----------------------------------------------------------

/// The (J+1)-component GMM that absorbs w into the mixing weights. Entries
/// 0..J-1 are ((1-w) pi_j, eps_j, s_j); entry J is (w, mu, sigma).
std::vector<MixtureComponent> degrade_to_mdn(const HmdnJointParams& params);

// --- sampling --------------------------------------------------------------

/// Draws `count` points. Gated mode picks one branch for all samples
/// (unimodal iff w > 0.5); generative mode draws v ~ Bernoulli(w) per sample.
std::vector<Sample> sample_joint(const HmdnJointParams& params, std::size_t count, Rng& rng,
                                 SampleMode mode);

/// Draws from a plain isotropic GMM; branch is the component index.
std::vector<Sample> sample_gmm(std::span<const MixtureComponent> comps, std::size_t count,
                               Rng& rng);

/// Test-time sampling for a trained model of the given mode: sgn always
/// uses the unimodal branch, mdn samples the degraded GMM, hmdn is gated.
std::vector<Sample> sample_model_joint(const HmdnJointParams& params, ModelMode mode,
                                       std::size_t count, Rng& rng);

/// Deterministic point estimate: mu when the unimodal branch is selected,
/// else the center of the highest-weight component.
Point mode_point(const HmdnJointParams& params, ModelMode mode);

}  // namespace hmdn
