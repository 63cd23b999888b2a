#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hmdn/mixture_head.h"

namespace hmdn {

/// One input with its per-joint label sets.
struct TrainingExample {
    Eigen::VectorXd input;
    std::vector<JointLabelSet> joints;
};

/// Header record of a dataset file.
struct DatasetInfo {
    int schema_version = 1;
    std::string generator = "custom";
    int joints = 1;         ///< D
    int dim = 1;            ///< P
    int feature_width = 1;  ///< F
    int m_occ = 1;
    double x_occ = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const DatasetInfo&) const = default;
};

struct Dataset {
    DatasetInfo info;
    std::vector<TrainingExample> examples;
};

/// Bitwise equality of headers, inputs, visibility bits and labels.
bool identical(const Dataset& a, const Dataset& b);

/// Fraction of joints labeled occluded across the dataset (0 for empty sets).
double occlusion_rate(const Dataset& dataset);

/// Fraction of occluded labels of joint `joint`.
double occlusion_rate(const Dataset& dataset, int joint);

}  // namespace hmdn
