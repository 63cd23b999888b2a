#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "hmdn/mixture_head.h"
#include "test_support.h"

using namespace hmdn;
using namespace hmdn::test;

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

HmdnJointParams unit_params(int dim, int components) {
    HmdnJointParams p;
    p.w = 0.5;
    p.mu = Point::Zero(dim);
    p.sigma = 1.0;
    for (int j = 0; j < components; ++j)
        p.comps.push_back({1.0 / components, Point::Zero(dim), 1.0});
    return p;
}

// Flat view of every parameter: w, mu, sigma, pi, eps, s.
std::vector<double> flatten(const HmdnJointParams& p) {
    std::vector<double> v{p.w};
    for (Eigen::Index k = 0; k < p.mu.size(); ++k) v.push_back(p.mu[k]);
    v.push_back(p.sigma);
    for (const auto& c : p.comps) v.push_back(c.weight);
    for (const auto& c : p.comps)
        for (Eigen::Index k = 0; k < c.center.size(); ++k) v.push_back(c.center[k]);
    for (const auto& c : p.comps) v.push_back(c.stddev);
    return v;
}

HmdnJointParams unflatten(const std::vector<double>& v, const HmdnJointParams& shape) {
    HmdnJointParams p = shape;
    std::size_t i = 0;
    p.w = v[i++];
    for (Eigen::Index k = 0; k < p.mu.size(); ++k) p.mu[k] = v[i++];
    p.sigma = v[i++];
    for (auto& c : p.comps) c.weight = v[i++];
    for (auto& c : p.comps)
        for (Eigen::Index k = 0; k < c.center.size(); ++k) c.center[k] = v[i++];
    for (auto& c : p.comps) c.stddev = v[i++];
    return p;
}

// Loss written from the definitions with plain densities; pi is not
// renormalized, so its partials are the free-parameter ones.
double oracle_loss(const HmdnJointParams& p, const JointLabelSet& s, ModelMode mode) {
    double total = 0.0;
    const double v = s.visible ? 1.0 : 0.0;
    for (const auto& y : s.labels) {
        const double n1 = normal_pdf(y, p.mu, p.sigma);
        const double g = gmm_pdf(y, p.comps);
        const double lvis = -v * std::log(p.w) - (1.0 - v) * std::log(1.0 - p.w);
        switch (mode) {
        case ModelMode::sgn: total += -std::log(n1); break;
        case ModelMode::mdn: total += -std::log(p.w * n1 + (1.0 - p.w) * g); break;
        case ModelMode::hmdn_hard: total += lvis + (s.visible ? -std::log(n1) : -std::log(g)); break;
        case ModelMode::hmdn_soft: total += lvis - p.w * std::log(n1) - (1.0 - p.w) * std::log(g); break;
        }
    }
    return total;
}

double max_fd_error(const HmdnJointParams& p, const JointLabelSet& s, ModelMode mode) {
    const auto analytic = flatten(grad_item_loss(p, s, mode));
    const auto base = flatten(p);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        auto up = base, down = base;
        up[i] += h;
        down[i] -= h;
        const double numeric =
            (oracle_loss(unflatten(up, p), s, mode) - oracle_loss(unflatten(down, p), s, mode)) / (2.0 * h);
        worst = std::max(worst, std::abs(analytic[i] - numeric) / std::max(1.0, std::abs(analytic[i])));
    }
    return worst;
}

}  // namespace

TEST_CASE("log_normal_iso closed forms") {
    CHECK(log_normal_iso(point({0.0}), point({0.0}), 1.0) == doctest::Approx(-0.9189385).epsilon(1e-7));
    CHECK(log_normal_iso(point({0.3, -1, 2}), point({0.3, -1, 2}), 1.0) ==
          doctest::Approx(-2.7568156).epsilon(1e-7));
    const double direct = std::log(1.0 / (std::sqrt(2.0 * kPi) * 2.0) * std::exp(-1.0 / 8.0));
    CHECK(log_normal_iso(point({1.0}), point({0.0}), 2.0) == doctest::Approx(direct).epsilon(1e-14));
}

TEST_CASE("log_normal_iso rejects bad input") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(log_normal_iso(point({nan}), point({0.0}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(log_normal_iso(point({0.0}), point({inf}), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(log_normal_iso(point({0.0}), point({0.0}), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(log_normal_iso(point({0.0}), point({0.0}), nan), std::invalid_argument);
    CHECK_THROWS_AS(log_normal_iso(point({0.0, 1.0}), point({0.0}), 1.0), std::invalid_argument);
}

TEST_CASE("gmm_log_pdf") {
    const std::vector<MixtureComponent> one{{1.0, point({0.0}), 1.0}};
    CHECK(gmm_log_pdf(point({0.0}), one) == doctest::Approx(-0.9189385).epsilon(1e-7));

    const std::vector<MixtureComponent> two{{0.5, point({0.0}), 1.0}, {0.5, point({2.0}), 1.0}};
    const double phi0 = 1.0 / std::sqrt(2.0 * kPi);
    const double phi2 = phi0 * std::exp(-2.0);
    CHECK(gmm_log_pdf(point({0.0}), two) == doctest::Approx(std::log(0.5 * phi0 + 0.5 * phi2)).epsilon(1e-14));

    SUBCASE("far component underflows without breaking the sum") {
        const std::vector<MixtureComponent> far{{0.5, point({0.0}), 1.0}, {0.5, point({1000.0}), 1.0}};
        const double v = gmm_log_pdf(point({0.0}), far);
        CHECK(std::isfinite(v));
        CHECK(std::abs(v - (std::log(0.5) - 0.5 * kLog2Pi)) < 1e-12);
    }
    SUBCASE("far from every component stays finite") {
        const std::vector<MixtureComponent> both{{0.5, point({1000.0}), 1.0}, {0.5, point({1001.0}), 1.0}};
        const double v = gmm_log_pdf(point({0.0}), both);
        CHECK(std::isfinite(v));
        CHECK(v == doctest::Approx(std::log(0.5) - 0.5 * kLog2Pi - 1000.0 * 1000.0 / 2.0 +
                                   std::log1p(std::exp(-(1001.0 * 1001.0 - 1000.0 * 1000.0) / 2.0))));
    }
    SUBCASE("all-zero weights") {
        const std::vector<MixtureComponent> dead{{0.0, point({0.0}), 1.0}, {0.0, point({1.0}), 1.0}};
        CHECK_THROWS_AS(gmm_log_pdf(point({0.0}), dead), std::invalid_argument);
    }
}

TEST_CASE("cond_log_pdf selects the branch") {
    HmdnJointParams p = unit_params(1, 1);
    p.mu = point({0.4});
    p.comps[0].center = point({-0.7});
    CHECK(cond_log_pdf(p, point({0.4}), true) == doctest::Approx(-0.9189385).epsilon(1e-7));
    CHECK(cond_log_pdf(p, point({-0.7}), false) == doctest::Approx(-0.9189385).epsilon(1e-7));

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto q = random_params(rng, 2, 3);
        const Point y = random_point(rng, 2);
        CHECK(cond_log_pdf(q, y, true) == log_normal_iso(y, q.mu, q.sigma));
        CHECK(cond_log_pdf(q, y, false) == gmm_log_pdf(y, q.comps));
    }
}

TEST_CASE("joint_log_pdf") {
    HmdnJointParams p = unit_params(1, 1);
    CHECK(joint_log_pdf(p, point({0.0}), true) == doctest::Approx(std::log(0.5) - 0.9189385).epsilon(1e-7));
    CHECK(joint_log_pdf(p, point({0.0}), true) == doctest::Approx(-1.6120857).epsilon(1e-7));

    const Floors floors;
    p.w = 1.0 - floors.eps_w;
    const double cond = cond_log_pdf(p, point({0.3}), true);
    CHECK(joint_log_pdf(p, point({0.3}), true) == doctest::Approx(cond + std::log(1.0 - floors.eps_w)));
    CHECK(std::abs(joint_log_pdf(p, point({0.3}), true) - cond) < 1e-5);
}

TEST_CASE("densities integrate to one on a 1-D grid") {
    Rng rng(11);
    const double lo = -40.0, hi = 40.0, dx = 1e-3;
    for (int draw = 0; draw < 20; ++draw) {
        const auto p = random_params(rng, 1, 3);
        double joint = 0.0, vis = 0.0, occ = 0.0;
        for (double x = lo; x <= hi; x += dx) {
            const Point y = point({x});
            joint += (std::exp(joint_log_pdf(p, y, true)) + std::exp(joint_log_pdf(p, y, false))) * dx;
            vis += std::exp(cond_log_pdf(p, y, true)) * dx;
            occ += std::exp(cond_log_pdf(p, y, false)) * dx;
        }
        CHECK(joint == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(vis == doctest::Approx(1.0).epsilon(1e-3));
        CHECK(occ == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("loss_vis") {
    CHECK(loss_vis(0.5, true) == doctest::Approx(0.6931472).epsilon(1e-7));
    CHECK(loss_vis(0.5, false) == doctest::Approx(0.6931472).epsilon(1e-7));
    const Floors floors;
    CHECK(loss_vis(1.0 - floors.eps_w, true) < 1e-5);
    CHECK(loss_vis(1.0 - floors.eps_w, true) == doctest::Approx(floors.eps_w).epsilon(1e-5));
    CHECK_THROWS_AS(loss_vis(0.0, true), std::invalid_argument);
    CHECK_THROWS_AS(loss_vis(1.0, false), std::invalid_argument);
    CHECK_THROWS_AS(loss_vis(1.5, false), std::invalid_argument);
}

TEST_CASE("loss_location_hard") {
    HmdnJointParams p = unit_params(3, 1);
    CHECK(loss_location_hard(p, p.mu, true) == doctest::Approx(2.7568156).epsilon(1e-7));

    HmdnJointParams sym = unit_params(1, 2);
    sym.comps[0].center = point({-1.0});
    sym.comps[1].center = point({1.0});
    CHECK(loss_location_hard(sym, point({-1.0}), false) == loss_location_hard(sym, point({1.0}), false));

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto q = random_params(rng, 2, 2);
        const Point y = random_point(rng, 2);
        const bool v = rng.bernoulli(0.5);
        CHECK(loss_location_hard(q, y, v) == -cond_log_pdf(q, y, v));
    }
}

TEST_CASE("loss_location_soft") {
    const Floors floors;
    Rng rng(8);
    SUBCASE("saturated gate matches the hard loss") {
        for (int i = 0; i < 200; ++i) {
            auto q = random_params(rng, 2, 3);
            const Point y = random_point(rng, 2);
            q.w = 1.0 - floors.eps_w;
            CHECK(std::abs(loss_location_soft(q, y) - loss_location_hard(q, y, true)) < 1e-4);
            q.w = floors.eps_w;
            CHECK(std::abs(loss_location_soft(q, y) - loss_location_hard(q, y, false)) < 1e-4);
        }
    }
    SUBCASE("equal branches") {
        HmdnJointParams p = unit_params(2, 1);
        p.mu = point({0.2, 0.1});
        p.comps[0].center = p.mu;
        const Point y = point({1.0, -0.5});
        CHECK(loss_location_soft(p, y) == doctest::Approx(loss_location_hard(p, y, true)).epsilon(1e-14));
    }
    SUBCASE("two-call oracle") {
        for (int i = 0; i < 200; ++i) {
            const auto q = random_params(rng, 2, 3);
            const Point y = random_point(rng, 2);
            const double single = -std::log(normal_pdf(y, q.mu, q.sigma));
            const double multi = -std::log(gmm_pdf(y, q.comps));
            CHECK(loss_location_soft(q, y) ==
                  doctest::Approx(q.w * single + (1.0 - q.w) * multi).epsilon(1e-12));
        }
    }
}

TEST_CASE("total_loss") {
    using Params = std::vector<HmdnJointParams>;
    using Labels = std::vector<JointLabelSet>;
    CHECK(total_loss(std::vector<Params>{}, std::vector<Labels>{}, LossMode::hard) == 0.0);

    Rng rng(21);
    const auto p0 = random_params(rng, 2, 2);
    const JointLabelSet vis0{{random_point(rng, 2)}, true};
    const double single = total_loss(std::vector<Params>{{p0}}, std::vector<Labels>{{vis0}}, LossMode::hard);
    CHECK(single == doctest::Approx(loss_vis(p0.w, true) + loss_location_hard(p0, vis0.labels[0], true)));

    std::vector<Params> params;
    std::vector<Labels> labels;
    for (int n = 0; n < 3; ++n) {
        params.push_back({random_params(rng, 2, 2), random_params(rng, 2, 2)});
        labels.push_back({random_labelset(rng, 2, true), random_labelset(rng, 2, false)});
    }
    for (LossMode mode : {LossMode::hard, LossMode::soft}) {
        double sum = 0.0;
        for (int n = 0; n < 3; ++n)
            sum += total_loss(std::vector<Params>{params[n]}, std::vector<Labels>{labels[n]}, mode);
        CHECK(total_loss(params, labels, mode) == doctest::Approx(sum).epsilon(1e-14));

        // Per-label sum, with each label adding its own visibility term.
        double expected = 0.0;
        for (int n = 0; n < 3; ++n)
            for (int d = 0; d < 2; ++d)
                for (const auto& y : labels[n][d].labels)
                    expected += loss_vis(params[n][d].w, labels[n][d].visible) +
                                (mode == LossMode::hard
                                     ? loss_location_hard(params[n][d], y, labels[n][d].visible)
                                     : loss_location_soft(params[n][d], y));
        CHECK(total_loss(params, labels, mode) == doctest::Approx(expected).epsilon(1e-14));
        CHECK(total_loss(params, labels, mode, {false, true}) == doctest::Approx(expected / 3.0).epsilon(1e-14));
    }

    SUBCASE("label averaging") {
        const JointLabelSet occ{{point({0.0, 0.0}), point({1.0, 0.0})}, false};
        const double summed = total_loss(std::vector<Params>{{p0}}, std::vector<Labels>{{occ}}, LossMode::hard);
        const double averaged =
            total_loss(std::vector<Params>{{p0}}, std::vector<Labels>{{occ}}, LossMode::hard, {true, false});
        CHECK(averaged == doctest::Approx(summed / 2.0));
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(total_loss(params, std::vector<Labels>(2), LossMode::hard), std::invalid_argument);
        auto short_labels = labels;
        short_labels[1].pop_back();
        CHECK_THROWS_AS(total_loss(params, short_labels, LossMode::hard), std::invalid_argument);
    }
}

TEST_CASE("label set validation") {
    HmdnJointParams p = unit_params(2, 2);
    const JointLabelSet two_visible{{point({0.0, 0.0}), point({1.0, 1.0})}, true};
    CHECK_THROWS_AS(item_loss(p, two_visible, ModelMode::hmdn_hard), std::invalid_argument);
    const JointLabelSet empty{{}, false};
    CHECK_THROWS_AS(item_loss(p, empty, ModelMode::hmdn_hard), std::invalid_argument);
    const JointLabelSet wrong_dim{{point({0.0})}, false};
    CHECK_THROWS_AS(item_loss(p, wrong_dim, ModelMode::hmdn_hard), std::invalid_argument);
}

TEST_CASE("params validation") {
    HmdnJointParams p = unit_params(2, 2);
    CHECK_NOTHROW(validate(p));
    auto bad = p;
    bad.w = 1.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = p;
    bad.sigma = 0.0;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = p;
    bad.comps[0].weight = 0.6;
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = p;
    bad.comps.clear();
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
    bad = p;
    bad.comps[1].center = point({0.0});
    CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("grad_loss closed forms") {
    HmdnJointParams p = unit_params(2, 2);
    p.mu = point({0.3, -0.2});
    const JointLabelSet at_mu{{p.mu}, true};
    const auto g = grad_loss(p, at_mu, LossMode::hard);
    CHECK(g.mu.norm() == 0.0);
    CHECK(g.w == doctest::Approx(-2.0));
}

TEST_CASE("gradients match central differences") {
    Rng rng(1234);
    for (ModelMode mode : {ModelMode::sgn, ModelMode::mdn, ModelMode::hmdn_hard, ModelMode::hmdn_soft}) {
        CAPTURE(static_cast<int>(mode));
        double worst = 0.0;
        for (int draw = 0; draw < 100; ++draw) {
            const int dim = 1 + static_cast<int>(rng.below(3));
            const int comps = 1 + static_cast<int>(rng.below(3));
            const auto p = random_params(rng, dim, comps);
            const auto s = random_labelset(rng, dim, rng.bernoulli(0.5));
            worst = std::max(worst, max_fd_error(p, s, mode));
        }
        CHECK(worst < 1e-6);
    }
}

TEST_CASE("gradients are finite at the floors") {
    Rng rng(77);
    const Floors floors;
    for (int draw = 0; draw < 100; ++draw) {
        auto p = random_params(rng, 2, 2);
        p.w = rng.bernoulli(0.5) ? floors.eps_w : 1.0 - floors.eps_w;
        p.sigma = floors.s_floor;
        p.comps[0].stddev = floors.s_floor;
        const auto s = random_labelset(rng, 2, rng.bernoulli(0.5));
        for (ModelMode mode : {ModelMode::sgn, ModelMode::mdn, ModelMode::hmdn_hard, ModelMode::hmdn_soft}) {
            for (double v : flatten(grad_item_loss(p, s, mode))) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("degrade_to_mdn") {
    HmdnJointParams p = unit_params(1, 2);
    p.w = 0.3;
    p.comps[0].weight = 0.6;
    p.comps[1].weight = 0.4;
    p.mu = point({5.0});
    p.sigma = 0.7;
    const auto d = degrade_to_mdn(p);
    REQUIRE(d.size() == 3);
    CHECK(d[0].weight == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(d[1].weight == doctest::Approx(0.28).epsilon(1e-15));
    CHECK(d[2].weight == doctest::Approx(0.30).epsilon(1e-15));
    CHECK(d[2].center[0] == 5.0);
    CHECK(d[2].stddev == 0.7);

    Rng rng(42);
    for (int draw = 0; draw < 2000; ++draw) {
        const int dim = 1 + static_cast<int>(rng.below(3));
        const auto q = random_params(rng, dim, 1 + static_cast<int>(rng.below(4)));
        const auto g = degrade_to_mdn(q);
        double total = 0.0;
        for (const auto& c : g) total += c.weight;
        CHECK(std::abs(total - 1.0) < 1e-12);
        const Point y = random_point(rng, dim, -3.0, 3.0);
        const double two_term = std::log(q.w * normal_pdf(y, q.mu, q.sigma) + (1.0 - q.w) * gmm_pdf(y, q.comps));
        CHECK(std::abs(gmm_log_pdf(y, g) - two_term) < 1e-10);
        CHECK(std::abs(marginal_log_pdf(q, y) - two_term) < 1e-10);
    }
}

TEST_CASE("sample_joint gated") {
    const Floors floors;
    Rng rng(9);
    SUBCASE("degenerate unimodal branch") {
        HmdnJointParams p = unit_params(2, 2);
        p.w = 0.9;
        p.mu = point({1.0, -1.0});
        p.sigma = floors.s_floor;
        for (const auto& s : sample_joint(p, 1000, rng, SampleMode::gated)) {
            CHECK(s.branch == kUnimodalBranch);
            CHECK((s.point - p.mu).cwiseAbs().maxCoeff() < 6.0 * floors.s_floor);
        }
    }
    SUBCASE("single component") {
        HmdnJointParams p = unit_params(2, 1);
        p.w = 0.1;
        for (const auto& s : sample_joint(p, 1000, rng, SampleMode::gated)) CHECK(s.branch == 0);
    }
    SUBCASE("tie goes to the mixture") {
        HmdnJointParams p = unit_params(2, 3);
        p.w = 0.5;
        for (const auto& s : sample_joint(p, 100, rng, SampleMode::gated)) CHECK(s.branch >= 0);
    }
    SUBCASE("count and determinism") {
        const auto p = random_params(rng, 2, 3);
        Rng a(17), b(17);
        const auto sa = sample_joint(p, 37, a, SampleMode::gated);
        const auto sb = sample_joint(p, 37, b, SampleMode::gated);
        REQUIRE(sa.size() == 37);
        for (std::size_t i = 0; i < sa.size(); ++i) {
            CHECK(sa[i].branch == sb[i].branch);
            CHECK(sa[i].point == sb[i].point);
        }
    }
}

TEST_CASE("sampling moments") {
    Rng rng(2024);
    const std::size_t n = 100000;
    SUBCASE("unimodal mean and branch purity") {
        HmdnJointParams p = random_params(rng, 3, 2);
        p.w = 0.7;
        const auto samples = sample_joint(p, n, rng, SampleMode::gated);
        Point mean = Point::Zero(3);
        int mixture_draws = 0;
        for (const auto& s : samples) {
            mean += s.point;
            mixture_draws += s.branch != kUnimodalBranch;
        }
        mean /= static_cast<double>(n);
        CHECK(mixture_draws == 0);
        for (int k = 0; k < 3; ++k)
            CHECK(std::abs(mean[k] - p.mu[k]) < 4.0 * p.sigma / std::sqrt(static_cast<double>(n)));
    }
    SUBCASE("component frequencies") {
        HmdnJointParams p = random_params(rng, 2, 4);
        p.w = 0.2;
        const auto samples = sample_joint(p, n, rng, SampleMode::gated);
        std::vector<double> freq(4, 0.0);
        for (const auto& s : samples) freq[static_cast<std::size_t>(s.branch)] += 1.0 / n;
        for (std::size_t j = 0; j < 4; ++j) {
            const double pi = p.comps[j].weight;
            CHECK(std::abs(freq[j] - pi) < 4.0 * std::sqrt(pi * (1.0 - pi) / n));
        }
    }
    SUBCASE("generative branch rate") {
        HmdnJointParams p = unit_params(1, 2);
        p.w = 0.5;
        const auto samples = sample_joint(p, n, rng, SampleMode::generative);
        double uni = 0.0;
        for (const auto& s : samples) uni += s.branch == kUnimodalBranch;
        CHECK(std::abs(uni / n - 0.5) < 0.005);
    }
}

TEST_CASE("model-mode sampling and point estimates") {
    Rng rng(31);
    auto p = random_params(rng, 2, 3);
    p.w = 0.8;
    for (const auto& s : sample_model_joint(p, ModelMode::sgn, 200, rng)) CHECK(s.branch == kUnimodalBranch);
    p.w = 0.2;
    for (const auto& s : sample_model_joint(p, ModelMode::sgn, 200, rng)) CHECK(s.branch == kUnimodalBranch);
    for (const auto& s : sample_model_joint(p, ModelMode::hmdn_hard, 200, rng)) CHECK(s.branch >= 0);

    // mdn draws the unimodal slot with probability w.
    p.w = 0.3;
    double uni = 0.0;
    const std::size_t n = 100000;
    for (const auto& s : sample_model_joint(p, ModelMode::mdn, n, rng)) uni += s.branch == kUnimodalBranch;
    CHECK(std::abs(uni / n - 0.3) < 4.0 * std::sqrt(0.3 * 0.7 / n));

    p.w = 0.8;
    CHECK(mode_point(p, ModelMode::hmdn_hard) == p.mu);
    p.w = 0.2;
    std::size_t heaviest = 0;
    for (std::size_t j = 1; j < p.comps.size(); ++j)
        if (p.comps[j].weight > p.comps[heaviest].weight) heaviest = j;
    CHECK(mode_point(p, ModelMode::hmdn_soft) == p.comps[heaviest].center);
    CHECK(mode_point(p, ModelMode::sgn) == p.mu);
}
