#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "charrnet/errors.hpp"
#include "charrnet/liegroup.hpp"
#include "oracles.hpp"

using namespace charrnet;
constexpr double kPi = std::numbers::pi;

namespace {
ManifoldPoint random_point(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lr(-3.0, 3.0), th(-kPi, kPi);
    return ManifoldPoint::make(std::exp(lr(rng)), th(rng));
}
GroupElement random_group(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> lr(-3.0, 3.0), th(-kPi, kPi);
    return {std::exp(lr(rng)), th(rng)};
}
double theta_gap(double a, double b) { return angular_distance(a, b); }
}  // namespace

TEST_CASE("wrap_angle lands in [-pi, pi)") {
    CHECK(wrap_angle(kPi) == doctest::Approx(-kPi));
    CHECK(wrap_angle(-kPi) == -kPi);
    CHECK(wrap_angle(0.5) == 0.5);
    CHECK(wrap_angle(2 * kPi + 0.25) == doctest::Approx(0.25));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 10000; ++i) {
        const double w = wrap_angle(u(rng));
        CHECK(w >= -kPi);
        CHECK(w < kPi);
    }
}

TEST_CASE("from_complex") {
    auto p = from_complex({1, 0});
    CHECK(p.r == 1.0);
    CHECK(p.theta == 0.0);
    p = from_complex({0, 2});
    CHECK(p.r == 2.0);
    CHECK(p.theta == doctest::Approx(kPi / 2));
    p = from_complex({0, 0});
    CHECK(p.r == kEpsR);
    CHECK(p.theta == 0.0);
    p = from_complex({1e-14, 1e-14});
    CHECK(p.r == kEpsR);
    CHECK(p.theta == 0.0);
}

TEST_CASE("log and exp maps") {
    auto v = log_map({1.0, 0.0});
    CHECK(v.log_r == 0.0);
    CHECK(v.theta == 0.0);
    v = log_map({std::numbers::e, 1.0});
    CHECK(v.log_r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v.theta == 1.0);

    std::mt19937_64 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const ManifoldPoint p = random_point(rng);
        const ManifoldPoint q = exp_map(log_map(p));
        CHECK(std::abs(q.r - p.r) <= 1e-12 * p.r);
        CHECK(theta_gap(q.theta, p.theta) <= 1e-12);
    }
}

TEST_CASE("group action") {
    std::mt19937_64 rng(3);
    const ManifoldPoint p0 = random_point(rng);
    const ManifoldPoint same = act(GroupElement::identity(), p0);
    CHECK(same.r == p0.r);
    CHECK(same.theta == p0.theta);

    const ManifoldPoint q = act({2.0, kPi}, {1.0, 0.0});
    CHECK(q.r == 2.0);
    CHECK(q.theta == doctest::Approx(-kPi));

    for (int i = 0; i < 1000; ++i) {
        const GroupElement g = random_group(rng), h = random_group(rng);
        const ManifoldPoint p = random_point(rng);
        const ManifoldPoint back = act(g, act(g.inverse(), p));
        CHECK(std::abs(back.r - p.r) <= 1e-12 * p.r);
        CHECK(theta_gap(back.theta, p.theta) <= 1e-12);
        // Action is compatible with composition.
        const ManifoldPoint a = act(g, act(h, p));
        const ManifoldPoint b = act(g.compose(h), p);
        CHECK(std::abs(a.r - b.r) <= 1e-12 * a.r);
        CHECK(theta_gap(a.theta, b.theta) <= 1e-12);
    }
}

TEST_CASE("ConvexWeights validation") {
    CHECK_THROWS_AS(ConvexWeights({0.5, 0.6}), ArgumentError);
    CHECK_THROWS_AS(ConvexWeights({1.5, -0.5}), ArgumentError);
    CHECK_NOTHROW(ConvexWeights({0.25, 0.75}));
    const auto u = ConvexWeights::uniform(4);
    for (double w : u.values()) CHECK(w == 0.25);
    const std::vector<double> logits{1000.0, -1000.0, 3.0};
    const auto s = ConvexWeights::softmax(logits);
    CHECK(s[0] == doctest::Approx(1.0));
    double sum = 0.0;
    for (double w : s.values()) sum += w;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
}

TEST_CASE("wfm fixed points") {
    const ManifoldPoint p{3.0, 1.0};
    auto m = wfm(std::vector<ManifoldPoint>{p}, ConvexWeights({1.0}));
    CHECK(m.point.r == doctest::Approx(3.0));
    CHECK(m.point.theta == doctest::Approx(1.0));
    CHECK_FALSE(m.degenerate);

    m = wfm(std::vector<ManifoldPoint>{{1.0, 0.0}, {4.0, kPi / 2}}, ConvexWeights({0.5, 0.5}));
    CHECK(m.point.r == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(m.point.theta == doctest::Approx(kPi / 4).epsilon(1e-15));

    m = wfm(std::vector<ManifoldPoint>{{1.0, 0.0}, {1.0, -kPi}}, ConvexWeights({0.5, 0.5}));
    CHECK(m.degenerate);
    CHECK(m.point.theta == 0.0);

    CHECK_THROWS_AS(wfm(std::vector<ManifoldPoint>{}, ConvexWeights::uniform(1)), SizeError);
    CHECK_THROWS_AS(wfm(std::vector<ManifoldPoint>{p, p}, ConvexWeights::uniform(3)), SizeError);
}

TEST_CASE("wfm matches the closed-form oracle and the two-point forms") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 500; ++rep) {
        const std::size_t n = 1 + rep % 9;
        std::vector<ManifoldPoint> pts;
        std::vector<double> r, th, w;
        double tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pts.push_back(random_point(rng));
            r.push_back(pts.back().r);
            th.push_back(pts.back().theta);
            w.push_back(u(rng) + 1e-3);
            tot += w.back();
        }
        for (double& x : w) x /= tot;
        const auto m = wfm(pts, ConvexWeights(w));
        const auto [ro, tho] = oracle::wfm(r, th, w);
        CHECK(std::abs(m.point.r - ro) <= 1e-12 * ro);
        CHECK(theta_gap(m.point.theta, tho) <= 1e-12);
        double rmin = 1e300, rmax = 0.0;
        for (double x : r) rmin = std::min(rmin, x), rmax = std::max(rmax, x);
        CHECK(m.point.r >= rmin * (1 - 1e-14));
        CHECK(m.point.r <= rmax * (1 + 1e-14));
    }
    for (int rep = 0; rep < 200; ++rep) {
        const ManifoldPoint a = random_point(rng), b = random_point(rng);
        const auto m = wfm(std::vector<ManifoldPoint>{a, b}, ConvexWeights::uniform(2));
        CHECK(std::abs(m.point.r - std::sqrt(a.r * b.r)) <= 1e-12 * m.point.r);
        // Half-angle of the resultant: bisector of the shorter arc.
        const double half = wrap_angle(a.theta + wrap_angle(b.theta - a.theta) / 2.0);
        if (std::abs(std::abs(wrap_angle(b.theta - a.theta)) - kPi) > 1e-6) CHECK(theta_gap(m.point.theta, half) <= 1e-12);
    }
}

TEST_CASE("wfm equivariance and distance invariance") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 1000; ++rep) {
        const GroupElement g = random_group(rng);
        std::vector<ManifoldPoint> pts, moved;
        std::vector<double> w;
        double tot = 0.0;
        for (int i = 0; i < 5; ++i) {
            pts.push_back(random_point(rng));
            moved.push_back(act(g, pts.back()));
            w.push_back(u(rng));
            tot += w.back();
        }
        for (double& x : w) x /= tot;
        const auto a = wfm(moved, ConvexWeights(w));
        const auto b = wfm(pts, ConvexWeights(w));
        if (a.degenerate || b.degenerate) continue;
        const ManifoldPoint gb = act(g, b.point);
        CHECK(std::abs(std::log(a.point.r) - std::log(gb.r)) <= 1e-10);
        CHECK(theta_gap(a.point.theta, gb.theta) <= 1e-10);

        const ManifoldPoint p = pts[0], q = pts[1];
        CHECK(std::abs(distance(act(g, p), act(g, q)) - distance(p, q)) <= 1e-10);
    }
}

TEST_CASE("distance") {
    std::mt19937_64 rng(6);
    const ManifoldPoint p = random_point(rng);
    CHECK(distance(p, p) == 0.0);
    CHECK(distance({1.0, 0.0}, {std::numbers::e, 0.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(distance({1.0, -kPi + 0.1}, {1.0, kPi - 0.1}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::abs(distance({1.0, -kPi + 0.1}, {1.0, kPi - 0.1}) - oracle::brute_angle_gap(-kPi + 0.1, kPi - 0.1)) < 1e-12);
    CHECK(std::isfinite(smoothed_distance(p, p)));
    CHECK(smoothed_distance(p, p) == doctest::Approx(std::sqrt(kEpsDist)));

    for (int rep = 0; rep < 100000; ++rep) {
        const ManifoldPoint a = random_point(rng), b = random_point(rng), c = random_point(rng);
        const double ab = distance(a, b), ba = distance(b, a);
        CHECK(ab == ba);
        CHECK(distance(a, c) <= ab + distance(b, c) + 1e-12);
        if (rep < 1000) CHECK(std::abs(angular_distance(a.theta, b.theta) - oracle::brute_angle_gap(a.theta, b.theta)) < 1e-12);
    }
}
