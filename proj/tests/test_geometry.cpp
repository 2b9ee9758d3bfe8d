#include "doctest.h"

#include <cmath>
#include <numbers>

#include "mtat/geometry.hpp"

using namespace mtat;

TEST_CASE("build_grid snaps dt below the CFL bound with nt*dt == T") {
    const Grid g = build_grid(1.0, 201, 2.0, 1.0, 0.5);
    CHECK(g.h == doctest::Approx(0.01));
    CHECK(g.dt <= 0.5 * g.h / std::numbers::sqrt2 + 1e-15);
    CHECK(g.nt * g.dt == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(g.dt * 1.0 * std::numbers::sqrt2 / g.h <= 0.5 + 1e-12);
}

TEST_CASE("build_grid: dt scales inversely with c_max") {
    const Grid g1 = build_grid(1.0, 201, 2.0, 1.0, 1.0);
    const Grid g2 = build_grid(1.0, 201, 2.0, 2.0, 1.0);
    CHECK(g2.dt == doctest::Approx(g1.dt / 2.0).epsilon(0.02));
}

TEST_CASE("build_grid rejects bad inputs") {
    CHECK_THROWS(build_grid(1.0, 15, 2.0, 1.0, 0.5));
    CHECK_THROWS(build_grid(-1.0, 201, 2.0, 1.0, 0.5));
    CHECK_THROWS(build_grid(1.0, 201, -2.0, 1.0, 0.5));
    CHECK_THROWS(build_grid(1.0, 201, 2.0, 1.0, 1.5));
    CHECK_THROWS(build_grid(1.0, 20001, 2.0, 1.0, 1e-4)); // step cap
}

TEST_CASE("domain mask and boundary points") {
    const Grid g = build_grid(1.0, 101, 0.5, 1.0, 0.5);
    const DomainDisk d = make_domain({0.0, 0.0}, 0.7, 64, g);
    for (const auto& p : d.boundary_points)
        CHECK(std::abs(dist(p, d.center) - d.radius) <= 1e-12 * d.radius);
    // strict interior nodes only
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const bool inside = std::hypot(g.x(i), g.y(j)) < d.radius;
            CHECK(static_cast<bool>(d.interior_mask[j * g.nx + i]) == inside);
        }
    CHECK_THROWS(make_domain({0.0, 0.0}, 1.2, 64, g)); // not inside the box
}

TEST_CASE("margin validation") {
    const Grid g = build_grid(2.0, 101, 2.0, 1.0, 0.5);
    const DomainDisk d = make_domain({0.0, 0.0}, 0.7, 64, g);
    CHECK_NOTHROW(validate_margin(d, g, 1.0, 2.0, 1.1)); // gap 1.3 >= 1.1
    CHECK_THROWS(validate_margin(d, g, 1.0, 3.0, 1.1));  // needs 1.65
}

TEST_CASE("boundary sampling: partition of unity and bilinear exactness") {
    const Grid g = build_grid(1.0, 64, 0.5, 1.0, 0.5);
    const DomainDisk d = make_domain({0.05, -0.03}, 0.6, 97, g);
    const BoundarySampling s = boundary_sampling(d, g);
    CHECK(s.arc_weight == doctest::Approx(2.0 * std::numbers::pi * 0.6 / 97));

    Field fx(g.nx, g.ny), fxy(g.nx, g.ny);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            fx.at(i, j) = g.x(i);
            fxy.at(i, j) = 3.0 * g.x(i) - 2.0 * g.y(j) + 0.25;
        }
    for (std::size_t k = 0; k < s.points.size(); ++k) {
        const auto& p = s.points[k];
        CHECK(p.w00 + p.w10 + p.w01 + p.w11 == doctest::Approx(1.0).epsilon(1e-14));
        const Vec2 bp = d.boundary_points[k];
        CHECK(s.sample(fx, k) == doctest::Approx(bp.x).epsilon(1e-13));
        CHECK(s.sample(fxy, k) ==
              doctest::Approx(3.0 * bp.x - 2.0 * bp.y + 0.25).epsilon(1e-12));
    }
}

TEST_CASE("boundary sampling: point on a grid node gets weight 1") {
    // radius chosen so the east point (R, 0) lands exactly on a node
    const Grid g = build_grid(1.0, 101, 0.5, 1.0, 0.5); // h = 0.02
    const DomainDisk d = make_domain({0.0, 0.0}, 0.6, 8, g);
    const BoundarySampling s = boundary_sampling(d, g);
    const auto& p = s.points[0]; // theta = 0 -> (0.6, 0), node (80, 50)
    CHECK(p.w00 == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("uniqueness times: constant speed, centered") {
    const Grid g = build_grid(2.0, 201, 1.0, 1.0, 0.5);
    const DomainDisk d = make_domain({0.0, 0.0}, 1.0, 64, g);
    Field c(g.nx, g.ny, 1.0);
    const TimeBounds tb = uniqueness_times(c, {0.0, 0.0}, d, g);
    CHECK(tb.R_Omega == doctest::Approx(1.0));
    CHECK(tb.r_Omega == doctest::Approx(0.0));
    CHECK(tb.alpha_conv == doctest::Approx(1.0));
    CHECK(tb.T_uniqueness == doctest::Approx(1.0));
    CHECK(tb.T1_halfbound == doctest::Approx(1.0));
    CHECK(tb.speed_condition_ok);
}

TEST_CASE("uniqueness times: x0 outside the domain") {
    const Grid g = build_grid(2.0, 201, 1.0, 1.0, 0.5);
    const DomainDisk d = make_domain({0.0, 0.0}, 1.0, 64, g);
    Field c(g.nx, g.ny, 1.0);
    const TimeBounds tb = uniqueness_times(c, {1.5, 0.0}, d, g);
    CHECK(tb.r_Omega == doctest::Approx(0.5));
    CHECK(tb.R_Omega == doctest::Approx(2.5));
    CHECK(tb.D_Omega == doctest::Approx(2.0));
}

TEST_CASE("uniqueness times: variable speed vs dense-sampling oracle") {
    const Grid g = build_grid(1.6, 161, 1.0, 1.3, 0.5);
    const DomainDisk d = make_domain({0.0, 0.0}, 1.0, 64, g);
    Field c(g.nx, g.ny);
    auto cf = [](double x, double y) {
        return 1.0 + 0.3 * std::exp(-(x * x + y * y));
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) c.at(i, j) = cf(g.x(i), g.y(j));
    const TimeBounds tb = uniqueness_times(c, {0.0, 0.0}, d, g);

    // oracle: dense sampling at 10x resolution with the analytic gradient
    double alpha_oracle = 1e300;
    const int nfine = 1601;
    for (int j = 0; j < nfine; ++j) {
        for (int i = 0; i < nfine; ++i) {
            const double x = -1.0 + 2.0 * i / (nfine - 1);
            const double y = -1.0 + 2.0 * j / (nfine - 1);
            if (x * x + y * y > 1.0) continue;
            const double e = std::exp(-(x * x + y * y));
            const double cx = -0.6 * x * e, cy = -0.6 * y * e;
            const double val = 1.0 - (x * cx + y * cy) / cf(x, y);
            alpha_oracle = std::min(alpha_oracle, val);
        }
    }
    CHECK(tb.alpha_conv == doctest::Approx(alpha_oracle).epsilon(1e-3));
    CHECK(tb.speed_condition_ok);
}

TEST_CASE("uniqueness time is monotone in the disk radius") {
    const Grid g = build_grid(2.0, 201, 1.0, 1.0, 0.5);
    Field c(g.nx, g.ny, 1.0);
    double prev = 0.0;
    for (double R : {0.4, 0.7, 1.0, 1.3}) {
        const DomainDisk d = make_domain({0.0, 0.0}, R, 64, g);
        const TimeBounds tb = uniqueness_times(c, {0.0, 0.0}, d, g);
        CHECK(tb.T_uniqueness >= prev);
        prev = tb.T_uniqueness;
    }
}

TEST_CASE("extend_grid keeps spacing and alignment") {
    const Grid g = build_grid(2.0, 201, 2.0, 1.0, 0.5);
    const Grid g2 = extend_grid(g, 50);
    CHECK(g2.h == g.h);
    CHECK(g2.dt == g.dt);
    CHECK(g2.nx == 301);
    CHECK(g2.x(50) == doctest::Approx(g.x(0)).epsilon(1e-15));
}
