#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hmdn/mixture_head.h"

namespace hmdn {

struct GradCheckOptions {
    int draws = 100;
    double step = 1e-5;               ///< central-difference step
    double head_tolerance = 1e-6;     ///< loss vs raw head outputs
    double weight_tolerance = 1e-5;   ///< loss vs network weights
    std::uint64_t seed = 0;
    /// Flip the sign of the analytic gradient. Used to prove the check can fail.
    bool sabotage = false;
    std::vector<ModelMode> modes = {ModelMode::sgn, ModelMode::mdn, ModelMode::hmdn_hard,
                                    ModelMode::hmdn_soft};
};

struct GradCheckRow {
    std::string suite;  ///< "head" or "weights"
    ModelMode mode = ModelMode::hmdn_hard;
    int draws = 0;
    std::size_t coordinates = 0;  ///< total coordinates compared
    double max_rel_error = 0.0;   ///< |analytic - numeric| / max(1, |analytic|)
    double tolerance = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckRow> rows;
    bool pass() const;
};

/// Compares analytic gradients with central differences on random draws.
/// The head suite perturbs raw head outputs of random joints; the weights
/// suite perturbs every weight of small random networks on random examples.
GradCheckReport run_gradcheck(const GradCheckOptions& options);

void write_gradcheck_csv(std::ostream& out, const GradCheckReport& report);

}  // namespace hmdn
