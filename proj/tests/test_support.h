#pragma once

// Hand-rolled generators and independent oracles shared by the unit tests.

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "hmdn/mixture_head.h"
#include "hmdn/rng.h"

namespace hmdn::test {

inline constexpr double kPi = 3.14159265358979323846;

inline Point point(std::initializer_list<double> xs) {
    Point p(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) p[i++] = x;
    return p;
}

inline Point random_point(Rng& rng, int dim, double lo = -2.0, double hi = 2.0) {
    Point p(dim);
    for (int k = 0; k < dim; ++k) p[k] = rng.uniform(lo, hi);
    return p;
}

/// Valid params with w in [0.05, 0.95], scales in [0.3, 2], pi on the simplex.
inline HmdnJointParams random_params(Rng& rng, int dim, int components) {
    HmdnJointParams p;
    p.w = rng.uniform(0.05, 0.95);
    p.mu = random_point(rng, dim, -1.0, 1.0);
    p.sigma = rng.uniform(0.3, 2.0);
    double total = 0.0;
    for (int j = 0; j < components; ++j) {
        MixtureComponent c;
        c.weight = rng.uniform(0.1, 1.0);
        c.center = random_point(rng, dim, -1.5, 1.5);
        c.stddev = rng.uniform(0.3, 2.0);
        total += c.weight;
        p.comps.push_back(c);
    }
    for (auto& c : p.comps) c.weight /= total;
    return p;
}

inline JointLabelSet random_labelset(Rng& rng, int dim, bool visible) {
    JointLabelSet s;
    s.visible = visible;
    const std::size_t count = visible ? 1 : 1 + rng.below(3);
    for (std::size_t m = 0; m < count; ++m) s.labels.push_back(random_point(rng, dim));
    return s;
}

// Densities written straight from the formulas, without log-sum-exp.
inline double normal_pdf(const Point& y, const Point& mu, double sigma) {
    const double r2 = (y - mu).squaredNorm();
    const double norm = std::pow(2.0 * kPi * sigma * sigma, -0.5 * static_cast<double>(y.size()));
    return norm * std::exp(-r2 / (2.0 * sigma * sigma));
}

inline double gmm_pdf(const Point& y, const std::vector<MixtureComponent>& comps) {
    double total = 0.0;
    for (const auto& c : comps) total += c.weight * normal_pdf(y, c.center, c.stddev);
    return total;
}

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace hmdn::test
