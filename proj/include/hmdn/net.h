#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hmdn/dataset.h"
#include "hmdn/mixture_head.h"
#include "hmdn/rng.h"

namespace hmdn {

/// Slicing of the raw network output into per-joint parameter blocks.
///
/// Each joint occupies `joint_width()` consecutive outputs laid out as
/// [w_raw | mu_raw (P) | sigma_raw | pi_raw (J) | eps_raw (J*P) | s_raw (J)].
struct HeadLayout {
    int joints = 1;      ///< D
    int dim = 1;         ///< P
    int components = 1;  ///< J

    int joint_width() const { return 2 + dim + components * (2 + dim); }
    int width() const { return joints * joint_width(); }

    int w_offset(int d) const { return d * joint_width(); }
    int mu_offset(int d) const { return w_offset(d) + 1; }
    int sigma_offset(int d) const { return mu_offset(d) + dim; }
    int pi_offset(int d) const { return sigma_offset(d) + 1; }
    int eps_offset(int d, int j) const { return pi_offset(d) + components + j * dim; }
    int s_offset(int d, int j) const { return pi_offset(d) + components + components * dim + j; }

    bool operator==(const HeadLayout&) const = default;
};

/// Raw scale outputs are capped here before exp() so decoded scales stay finite.
inline constexpr double kMaxLogScale = 50.0;

/// Applies the range-respecting activations: logistic (clamped) for w, exp
/// plus floor for sigma and s_j, softmax for pi, identity for locations.
std::vector<HmdnJointParams> decode_head(const Eigen::VectorXd& raw, const HeadLayout& layout,
                                         const Floors& floors);

/// Chain rule through decode_head: maps per-joint parameter gradients to
/// dL/d(raw).
Eigen::VectorXd head_backward(const Eigen::VectorXd& raw, const HeadLayout& layout,
                              const Floors& floors, std::span<const HmdnJointParams> params,
                              std::span<const HmdnGrad> grads);

struct DenseLayer {
    Eigen::MatrixXd weight;  ///< out x in
    Eigen::VectorXd bias;
};

using MlpGrads = std::vector<DenseLayer>;

enum class MultiLabelPolicy { reject, all, first };

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps_adam = 1e-8;
    int components = 3;  ///< J
    std::vector<int> hidden = {64, 64};
    ModelMode mode = ModelMode::hmdn_hard;
    std::uint64_t seed = 0;
    Floors floors;
    /// Only consulted for mode sgn: what to do with multi-label joints.
    MultiLabelPolicy sgn_multi_label = MultiLabelPolicy::reject;
    /// Divide each joint's summed label loss by its label count.
    bool average_labels = false;

    bool operator==(const TrainConfig&) const = default;
};

/// Dense regressor with rectifier hidden units and a linear output layer,
/// plus the head that turns outputs into per-joint distributions.
struct MlpModel {
    std::vector<int> layer_dims;  ///< input, hidden..., raw width
    std::vector<DenseLayer> layers;
    HeadLayout head;
    ModelMode mode = ModelMode::hmdn_hard;
    Floors floors;
    TrainConfig config;
    /// Bumped on every optimizer update; forward caches record it.
    std::uint64_t revision = 0;

    int input_width() const { return layer_dims.front(); }
    int output_width() const { return layer_dims.back(); }

    /// Xavier-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
    static MlpModel create(int input_width, const HeadLayout& head, const TrainConfig& config,
                           Rng& rng);

    bool same_weights(const MlpModel& other) const;
};

struct ForwardCache {
    const MlpModel* model = nullptr;
    std::uint64_t revision = 0;
    std::vector<Eigen::VectorXd> inputs;  ///< input to each layer
    std::vector<Eigen::VectorXd> pre;     ///< pre-activation of each layer
    Eigen::VectorXd raw;
};

ForwardCache forward(const MlpModel& model, const Eigen::VectorXd& x);

/// Weight gradients for upstream gradient dL/d(raw). Throws std::logic_error
/// when `cache` was produced by another model or an older revision.
MlpGrads backward(const MlpModel& model, const ForwardCache& cache,
                  const Eigen::VectorXd& draw);

MlpGrads zero_grads_like(const MlpModel& model);
void add_into(MlpGrads& acc, const MlpGrads& g);

/// Per-joint distributions predicted for input x.
std::vector<HmdnJointParams> predict(const MlpModel& model, const Eigen::VectorXd& x);

/// Labels used for training under the model's mode and label policy.
JointLabelSet training_labels(const JointLabelSet& labels, const TrainConfig& config);

/// Loss of one example and its gradient with respect to the raw outputs.
struct ExampleLoss {
    double loss = 0.0;
    Eigen::VectorXd draw;
};

ExampleLoss example_loss(const MlpModel& model, const ForwardCache& cache,
                         const TrainingExample& example);

/// Loss of one example and weight gradients in one call.
double example_loss_and_grads(const MlpModel& model, const TrainingExample& example,
                              MlpGrads& grads_out);

/// Loss of the model on a dataset without gradients (sum over examples).
double dataset_loss(const MlpModel& model, const Dataset& dataset);

struct AdamState {
    std::vector<DenseLayer> first;
    std::vector<DenseLayer> second;
    std::uint64_t step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState for_model(const MlpModel& model, const TrainConfig& config);
};

/// Bias-corrected Adam update, in place.
void adam_step(MlpModel& model, AdamState& state, const MlpGrads& grads);

struct TrainResult {
    MlpModel model;
    std::vector<double> loss_trace;  ///< per-epoch sum of pre-update batch losses
};

/// Mini-batch Adam training. Deterministic given config.seed: init uses
/// stream 1 and shuffling stream 2 of the seed.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

/// Checks that `dataset` can be trained under `config`; throws
/// std::invalid_argument describing the mismatch otherwise.
void check_trainable(const Dataset& dataset, const TrainConfig& config);

// --- serialization ---------------------------------------------------------

void write_model(std::ostream& out, const MlpModel& model);
MlpModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

std::string to_string(ModelMode mode);
ModelMode parse_model_mode(const std::string& text);
std::string to_string(MultiLabelPolicy policy);
MultiLabelPolicy parse_multi_label_policy(const std::string& text);

}  // namespace hmdn
