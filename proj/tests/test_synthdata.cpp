#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "hmdn/synthdata.h"
#include "hmdn/visibility.h"
#include "test_support.h"

using namespace hmdn;
using namespace hmdn::test;

namespace {

std::string dataset_text(const Dataset& ds) {
    std::ostringstream out;
    write_dataset(out, ds);
    return out.str();
}

Dataset parse(const std::string& text) {
    std::istringstream in(text);
    return read_dataset(in);
}

}  // namespace

TEST_CASE("inverse sine generator") {
    CHECK(inverse_sine_input(0.0) == 0.0);
    CHECK(inverse_sine_input(0.5) == doctest::Approx(0.5).epsilon(1e-15));

    const Dataset ds = gen_inverse_sine(500, 0.0, 3);
    CHECK(ds.info.joints == 1);
    CHECK(ds.info.dim == 1);
    CHECK(ds.info.feature_width == 1);
    for (const auto& ex : ds.examples) {
        REQUIRE(ex.joints.size() == 1);
        const double t = ex.joints[0].labels[0][0];
        CHECK(t >= 0.0);
        CHECK(t < 1.0);
        CHECK(ex.input[0] == inverse_sine_input(t));
        CHECK_FALSE(ex.joints[0].visible);
    }
    CHECK(identical(gen_inverse_sine(100, 0.05, 9), gen_inverse_sine(100, 0.05, 9)));
    CHECK_FALSE(identical(gen_inverse_sine(100, 0.05, 9), gen_inverse_sine(100, 0.05, 10)));
    CHECK_THROWS_AS(gen_inverse_sine(0, 0.05, 1), std::invalid_argument);
}

TEST_CASE("inverse sine mapping is multi-valued") {
    // Distinct roots of t + 0.3 sin(2 pi t) = 0.5 on a dense grid.
    int roots = 0;
    bool inside = false;
    for (int i = 0; i <= 1000000; ++i) {
        const double t = i * 1e-6;
        const bool hit = std::abs(inverse_sine_input(t) - 0.5) < 1e-3;
        if (hit && !inside) ++roots;
        inside = hit;
    }
    CHECK(roots >= 3);
}

TEST_CASE("finger kinematics") {
    const FingerScene straight{0.0, 0.0};
    CHECK(straight.mid().isApprox(Eigen::Vector2d(1.0, 0.0)));
    CHECK(straight.tip().isApprox(Eigen::Vector2d(1.8, 0.0)));
    const FingerScene up{kPi / 2.0, 0.0};
    CHECK((up.mid() - Eigen::Vector2d(0.0, 1.0)).norm() < 1e-15);
    CHECK((up.tip() - Eigen::Vector2d(0.0, 1.8)).norm() < 1e-15);

    const FingerOptions options;
    Rng rng(1);
    const auto occluded = finger_example(straight, options, rng);
    CHECK_FALSE(occluded.joints[1].visible);
    CHECK(occluded.joints[1].labels.size() == 3);
    CHECK(occluded.input[2] == kOccludedSentinel);
    CHECK(occluded.input[3] == kOccludedSentinel);
    const auto visible = finger_example(up, options, rng);
    CHECK(visible.joints[1].visible);
    CHECK(visible.joints[1].labels.size() == 1);
    CHECK(std::abs(visible.input[3] - 1.8) < 0.1);

    Rng round(4);
    for (int i = 0; i < 200; ++i) {
        const FingerScene s{round.uniform(0.0, FingerScene::kMaxTheta1), round.uniform(0.0, FingerScene::kMaxTheta2)};
        const FingerScene back = FingerScene::from_points(s.mid(), s.tip());
        CHECK(back.theta1 == doctest::Approx(s.theta1).epsilon(1e-12));
        CHECK(back.theta2 == doctest::Approx(s.theta2).epsilon(1e-12));
    }
}

TEST_CASE("occluded alternatives replay the constraint") {
    const FingerOptions options{1.2, 50, 0.0};
    Rng rng(8);
    const FingerScene scene{0.0, 0.1};
    const auto ex = finger_example(scene, options, rng);
    REQUIRE(ex.joints[1].labels.size() == 50);
    for (const auto& y : ex.joints[1].labels) {
        CHECK(std::abs((y - scene.mid()).norm() - FingerScene::kLink2) < 1e-9);
        CHECK(y[0] >= 1.2);
    }
}

TEST_CASE("feasible theta2 matches a grid scan") {
    Rng rng(10);
    for (int draw = 0; draw < 200; ++draw) {
        const double theta1 = rng.uniform(0.0, FingerScene::kMaxTheta1);
        const double x_occ = rng.uniform(0.0, 1.9);
        const auto intervals = feasible_theta2(theta1, x_occ);
        auto inside = [&](double t2) {
            for (const auto& [s, e] : intervals)
                if (t2 >= s && t2 <= e) return true;
            return false;
        };
        for (int i = 0; i <= 400; ++i) {
            const double t2 = FingerScene::kMaxTheta2 * i / 400.0;
            const double x = FingerScene{theta1, t2}.tip().x();
            if (std::abs(x - x_occ) < 1e-9) continue;
            CHECK(inside(t2) == (x >= x_occ));
        }
    }
    CHECK(feasible_theta2(0.0, 10.0).empty());
    Rng r(1);
    CHECK_THROWS_AS(sample_feasible_theta2(0.0, 10.0, r), std::domain_error);
}

TEST_CASE("finger dataset properties") {
    FingerOptions options;
    options.m_occ = 4;
    const Dataset ds = gen_finger_dataset(3000, options, 11);
    CHECK(ds.info.feature_width == 4);
    CHECK(ds.info.m_occ == 4);
    std::size_t occluded = 0;
    for (const auto& ex : ds.examples) {
        REQUIRE(ex.joints.size() == 2);
        CHECK(ex.joints[0].visible);
        REQUIRE(ex.joints[0].labels.size() == 1);
        const Point mid = ex.joints[0].labels[0];
        const auto& tip = ex.joints[1];
        CHECK(tip.labels.size() == (tip.visible ? 1u : 4u));
        for (const auto& y : tip.labels) {
            CHECK(std::abs((y - mid).norm() - FingerScene::kLink2) < 1e-12);
            CHECK((y[0] >= options.x_occ) == !tip.visible);
        }
        occluded += !tip.visible;
    }
    CHECK(occlusion_rate(ds, 1) == doctest::Approx(static_cast<double>(occluded) / 3000.0));
    CHECK(occlusion_rate(ds, 1) > 0.1);
    CHECK(occlusion_rate(ds, 0) == 0.0);
    CHECK(identical(ds, gen_finger_dataset(3000, options, 11)));

    options.x_occ = 10.0;
    CHECK(occlusion_rate(gen_finger_dataset(1000, options, 7), 1) == 0.0);
    options.m_occ = 0;
    CHECK_THROWS_AS(gen_finger_dataset(10, options, 1), std::invalid_argument);
}

TEST_CASE("finger render") {
    const RenderOptions ro;
    const OccluderBox slab = OccluderBox::half_plane(1.2);
    SUBCASE("visible tip keeps its pixels") {
        const FingerScene scene{kPi / 2.0, 0.3};
        const auto r = render_finger_depth(scene, slab, ro);
        CHECK(assign_pixels(r.image, r.spheres).counts[1] >= kDefaultTauPix);
    }
    SUBCASE("tip behind the occluder") {
        const FingerScene scene{0.0, 0.2};
        REQUIRE(scene.tip().x() >= 1.2);
        const auto r = render_finger_depth(scene, slab, ro);
        CHECK(assign_pixels(r.image, r.spheres).counts[1] < kDefaultTauPix);
    }
    SUBCASE("empty occluder leaves the capsule rasterization") {
        Rng rng(3);
        for (int draw = 0; draw < 20; ++draw) {
            const FingerScene scene{rng.uniform(0.0, FingerScene::kMaxTheta1), rng.uniform(0.0, FingerScene::kMaxTheta2)};
            const auto r = render_finger_depth(scene, OccluderBox::none(), ro);
            for (int v = 0; v < ro.size; ++v)
                for (int u = 0; u < ro.size; ++u) {
                    const bool fg = r.image.at(u, v) > 0.0f;
                    CHECK(fg == on_finger(scene, ro, u, v));
                    if (fg) CHECK(r.image.at(u, v) == static_cast<float>(ro.finger_depth));
                }
        }
    }
    SUBCASE("sphere model") {
        const FingerScene scene{0.4, 0.9};
        const auto r = render_finger_depth(scene, slab, ro);
        REQUIRE(r.spheres.size() == 2);
        CHECK(r.spheres.centers[1].head<2>().isApprox(scene.tip()));
        CHECK(r.spheres.centers[1].z() == ro.finger_depth);
        CHECK(r.spheres.radii[0] == ro.sphere_radius);
    }
    SUBCASE("pinhole cameras are rejected") {
        RenderOptions pin = ro;
        pin.intrinsics.projection = Projection::pinhole;
        CHECK_THROWS_AS(render_finger_depth(FingerScene{}, slab, pin), std::invalid_argument);
    }
}

TEST_CASE("dataset files") {
    SUBCASE("empty dataset is a header line") {
        Dataset empty;
        empty.info.generator = "finger";
        const std::string text = dataset_text(empty);
        CHECK(std::count(text.begin(), text.end(), '\n') == 1);
        CHECK(text.rfind("#hmdn-dataset", 0) == 0);
        CHECK(identical(parse(text), empty));
    }
    SUBCASE("one example") {
        Dataset one = gen_finger_dataset(1, FingerOptions{}, 5);
        one.examples[0].input[1] = 0.1 + 0.2;  // not representable in short decimal
        CHECK(identical(parse(dataset_text(one)), one));
    }
    SUBCASE("ten thousand examples, hashed") {
        const Dataset big = gen_finger_dataset(10000, FingerOptions{}, 6);
        const std::string text = dataset_text(big);
        const Dataset back = parse(text);
        CHECK(identical(back, big));
        CHECK(std::hash<std::string>{}(dataset_text(back)) == std::hash<std::string>{}(text));
    }
    SUBCASE("inverse sine round trip") {
        const Dataset ds = gen_inverse_sine(1000, 0.05, 2);
        CHECK(identical(parse(dataset_text(ds)), ds));
    }
    SUBCASE("malformed records name their line") {
        const std::string good = dataset_text(gen_finger_dataset(3, FingerOptions{}, 5));
        std::string bad = good;
        const auto third = bad.find('\n', bad.find('\n') + 1) + 1;  // start of line 3
        bad.insert(third, "oops ");
        try {
            parse(bad);
            FAIL("expected a parse error");
        } catch (const DatasetParseError& e) {
            CHECK(e.line() == 3);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        CHECK_THROWS_AS(parse("garbage header\n"), DatasetParseError);
        std::string short_line = good.substr(0, good.size() - 1);
        short_line = short_line.substr(0, short_line.rfind(' '));
        short_line = short_line.substr(0, short_line.rfind(' ')) + "\n";
        CHECK_THROWS_AS(parse(short_line), DatasetParseError);
    }
}
