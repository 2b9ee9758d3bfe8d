#include "doctest.h"

#include <cmath>

#include "mtat/medium.hpp"
#include "oracles.hpp"

using namespace mtat;

namespace {

struct Setup {
    Grid grid;
    DomainDisk domain;
};

Setup small_setup(int nx = 121, double halfwidth = 1.2, double R = 0.7) {
    Setup s{build_grid(halfwidth, nx, 1.0, 1.5, 0.5), {}};
    s.domain = make_domain({0.0, 0.0}, R, 64, s.grid);
    return s;
}

} // namespace

TEST_CASE("free-space medium passes all invariants") {
    auto [grid, domain] = small_setup();
    const Medium m = make_medium({}, grid, domain);
    CHECK(m.c0 == doctest::Approx(1.0));
    CHECK(m.c_max == doctest::Approx(1.0));
    for (std::size_t k = 0; k < m.c.v.size(); ++k) {
        CHECK(m.c.v[k] == 1.0);
        CHECK(m.a.v[k] == 0.0);
        CHECK(m.b.v[k] == 0.0);
        CHECK(m.kernel.amplitude.v[k] == 0.0);
    }
}

TEST_CASE("cutoff enforces exact support and keeps interior values") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.c = [](double, double) { return 1.2; };
    spec.a = [](double x, double) { return x < 0.2 ? 0.5 : 0.0; };
    spec.b = [](double, double) { return 0.1; };
    spec.q = [](double, double) { return 0.8; };
    const Medium m = make_medium(spec, grid, domain);

    const Mask closed = closed_disk_mask(domain, grid);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const std::size_t k = m.c.idx(i, j);
            if (!closed[k]) {
                CHECK(m.c.v[k] == 1.0);
                CHECK(m.a.v[k] == 0.0);
                CHECK(m.b.v[k] == 0.0);
                CHECK(m.kernel.amplitude.v[k] == 0.0);
            } else {
                CHECK(m.a.v[k] >= 0.0);
                CHECK(m.b.v[k] >= 0.0);
            }
        }
    }
    // deep inside the disk the cutoff is 1
    const int ic = (grid.nx - 1) / 2;
    CHECK(m.c.at(ic, ic) == doctest::Approx(1.2));
    CHECK(m.b.at(ic, ic) == doctest::Approx(0.1));
    CHECK(m.kernel.amplitude.at(ic, ic) == doctest::Approx(0.8));
    CHECK(m.c0 == doctest::Approx(1.0 / 1.2));
}

TEST_CASE("negative coefficients are rejected with a located error") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.b = [](double, double) { return -0.1; };
    CHECK_THROWS_WITH_AS(make_medium(spec, grid, domain),
                         doctest::Contains("b >= 0"), std::invalid_argument);
    CoefficientSpec spec2;
    spec2.a = [](double, double) { return -1e-3; };
    CHECK_THROWS(make_medium(spec2, grid, domain));
    CoefficientSpec spec3;
    spec3.q = [](double, double) { return -2.0; };
    CHECK_THROWS(make_medium(spec3, grid, domain));
}

TEST_CASE("psi-compatibility: p = b + q/alpha is nonnegative") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.q = [](double, double) { return 0.6; };
    spec.alpha_decay = 3.0;
    const Medium m = make_medium(spec, grid, domain);
    const Field p = m.p_coefficient();
    const int ic = (grid.nx - 1) / 2;
    CHECK(p.at(ic, ic) == doctest::Approx(0.2));
    for (double v : p.v) CHECK(v >= 0.0);
}

TEST_CASE("check_speed_condition: constant speed has margin equal to the speed") {
    auto [grid, domain] = small_setup();
    const Medium m = make_medium({}, grid, domain);
    const auto rep = check_speed_condition(m, {0.0, 0.0}, grid, domain);
    CHECK(rep.ok);
    CHECK(rep.margin == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("check_speed_condition: radial-decreasing bump vs dense oracle") {
    auto [grid, domain] = small_setup(161);
    CoefficientSpec spec;
    auto cf = [](double x, double y) {
        return 1.0 + 0.5 * std::exp(-4.0 * (x * x + y * y));
    };
    spec.c = cf;
    const Medium m = make_medium(spec, grid, domain);
    const auto rep = check_speed_condition(m, {0.0, 0.0}, grid, domain);
    CHECK(rep.ok);

    // dense 10x sampling with the analytic gradient of the medium's field,
    // cutoff included: c_med = 1 + chi(d) (c - 1), d = R - r
    const double w = 2.0 * grid.h;
    auto chi = [&](double d) { return domain_cutoff(d, grid.h); };
    auto dchi = [&](double d) {
        if (d <= 0.0 || d >= w) return 0.0;
        const double t = d / w;
        return 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
    };
    double margin_oracle = 1e300;
    const int nfine = 1401;
    for (int j = 0; j < nfine; ++j) {
        for (int i = 0; i < nfine; ++i) {
            const double x = -0.7 + 1.4 * i / (nfine - 1);
            const double y = -0.7 + 1.4 * j / (nfine - 1);
            const double r = std::hypot(x, y);
            if (r > 0.7) continue;
            const double d = 0.7 - r;
            const double e = std::exp(-4.0 * (x * x + y * y));
            const double bump = 0.5 * e;                  // c - 1
            const double dbump_dot = -8.0 * r * r * 0.5 * e; // x.grad(c-1)
            const double c_med = 1.0 + chi(d) * bump;
            // x.grad c_med = chi * x.grad(c-1) + chi'(d) (x.grad d) (c-1),
            // with x.grad d = -r
            const double dot = chi(d) * dbump_dot - dchi(d) * r * bump;
            margin_oracle = std::min(margin_oracle, c_med - dot);
        }
    }
    CHECK(rep.margin == doctest::Approx(margin_oracle).epsilon(2e-3));
}

TEST_CASE("check_speed_condition: steep radial speed violates the condition") {
    auto [grid, domain] = small_setup(161);
    CoefficientSpec spec;
    // (x - x0).grad c = 2|x| exceeds c on the linear ramp, margin goes negative
    spec.c = [](double x, double y) {
        const double r = std::hypot(x, y);
        return std::min(2.0, std::max(0.55, 2.0 * r));
    };
    const Medium m = make_medium(spec, grid, domain);
    const auto rep = check_speed_condition(m, {0.0, 0.0}, grid, domain);
    CHECK_FALSE(rep.ok);
    CHECK(rep.margin <= 0.0);
}

TEST_CASE("attenuation checker: exponential kernel passes everything") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.q = [](double, double) { return 1.0; };
    spec.alpha_decay = 1.0;
    const Medium m = make_medium(spec, grid, domain);
    const auto rep = check_attenuation_condition(m.kernel, 3.0, 0.01, 100, 42);
    CHECK(rep.value_sign_ok);
    CHECK(rep.first_difference_ok);
    CHECK(rep.second_difference_ok);
    CHECK(rep.quadratic_form_ok);
    CHECK(rep.all_ok());
}

TEST_CASE("attenuation checker: cosine kernel fails the first-difference check") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.family = MemoryKernel::Family::Tabulated;
    spec.table_dt = 0.01;
    const int n = 501; // covers [0, 5]
    spec.table.resize(n);
    for (int j = 0; j < n; ++j) spec.table[j] = std::cos(j * 0.01);
    spec.q = [](double, double) { return 1.0; };
    const Medium m = make_medium(spec, grid, domain);
    const auto rep = check_attenuation_condition(m.kernel, 5.0, 0.01, 50, 7);
    CHECK_FALSE(rep.first_difference_ok);
    CHECK_FALSE(rep.all_ok());
}

TEST_CASE("attenuation checker: zero kernel passes with zero quadratic form") {
    auto [grid, domain] = small_setup();
    const Medium m = make_medium({}, grid, domain);
    const auto rep = check_attenuation_condition(m.kernel, 2.0, 0.01, 20, 3);
    CHECK(rep.all_ok());
    CHECK(rep.worst_quadratic_form == 0.0);
}

TEST_CASE("psi_from_phi: exponential amplitude is -q/alpha") {
    auto [grid, domain] = small_setup();
    CoefficientSpec spec;
    spec.q = [](double, double) { return 2.0; };
    spec.alpha_decay = 4.0;
    const Medium m = make_medium(spec, grid, domain);
    const MemoryKernel psi = psi_from_phi(m.kernel);
    const int ic = (grid.nx - 1) / 2;
    CHECK(psi.amplitude.at(ic, ic) == doctest::Approx(-0.5));
    CHECK(psi.alpha_decay == doctest::Approx(4.0));

    const Medium zero = make_medium({}, grid, domain);
    const MemoryKernel psi0 = psi_from_phi(zero.kernel);
    CHECK(psi0.is_zero());
}

TEST_CASE("make_phantom: single bump peaks at its center") {
    auto [grid, domain] = small_setup(121);
    const Phantom ph = make_phantom(PhantomKind::GaussianBumps,
                                    {{0.0, 0.0, 0.2, 0.0, 1.0}}, grid, domain);
    CHECK(max_abs(ph.f) == doctest::Approx(1.0).epsilon(1e-12));
    const int ic = (grid.nx - 1) / 2;
    CHECK(ph.f.at(ic, ic) == doctest::Approx(1.0));
    // exact zeros outside the closed disk
    const Mask closed = closed_disk_mask(domain, grid);
    for (std::size_t k = 0; k < ph.f.v.size(); ++k)
        if (!closed[k]) CHECK(ph.f.v[k] == 0.0);
}

TEST_CASE("make_phantom: empty feature list gives the zero field") {
    auto [grid, domain] = small_setup();
    const Phantom ph = make_phantom(PhantomKind::GaussianBumps, {}, grid, domain);
    CHECK(max_abs(ph.f) == 0.0);
}

TEST_CASE("make_phantom: disjoint bumps have pythagorean L2 norms") {
    auto [grid, domain] = small_setup(161);
    const PhantomFeature b1{-0.3, 0.0, 0.04, 0.0, 1.0};
    const PhantomFeature b2{0.35, 0.1, 0.05, 0.0, 0.7};
    const Phantom p1 = make_phantom(PhantomKind::GaussianBumps, {b1}, grid, domain);
    const Phantom p2 = make_phantom(PhantomKind::GaussianBumps, {b2}, grid, domain);
    const Phantom p12 = make_phantom(PhantomKind::GaussianBumps, {b1, b2}, grid, domain);
    auto l2 = [&](const Field& f) {
        double s = 0.0;
        for (double v : f.v) s += v * v;
        return s * grid.h * grid.h;
    };
    const double lhs = l2(p12.f);
    const double rhs = l2(p1.f) + l2(p2.f);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("make_phantom rejects features that reach the boundary") {
    auto [grid, domain] = small_setup();
    CHECK_THROWS(make_phantom(PhantomKind::GaussianBumps,
                              {{0.5, 0.0, 0.1, 0.0, 1.0}}, grid, domain));
    CHECK_THROWS(make_phantom(PhantomKind::SmoothedDisks,
                              {{0.0, 0.0, 0.7, 0.0, 1.0}}, grid, domain));
    CHECK_THROWS(make_phantom(PhantomKind::Annulus,
                              {{0.0, 0.0, 0.5, 0.8, 1.0}}, grid, domain));
}

TEST_CASE("phantom kinds: smoothed disk and annulus have expected structure") {
    auto [grid, domain] = small_setup(161);
    const Phantom disk = make_phantom(PhantomKind::SmoothedDisks,
                                      {{0.1, 0.0, 0.25, 0.0, 2.0}}, grid, domain);
    const int ic = (grid.nx - 1) / 2;
    const int ioff = ic + static_cast<int>(std::lround(0.1 / grid.h));
    CHECK(disk.f.at(ioff, ic) == doctest::Approx(2.0)); // plateau value
    const Phantom ann = make_phantom(PhantomKind::Annulus,
                                     {{0.0, 0.0, 0.25, 0.45, 1.0}}, grid, domain);
    // zero at the center, full amplitude mid-ring
    CHECK(ann.f.at(ic, ic) == doctest::Approx(0.0));
    const int iring = ic + static_cast<int>(std::lround(0.35 / grid.h));
    CHECK(ann.f.at(iring, ic) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("random phantoms are deterministic and supported in the disk") {
    auto [grid, domain] = small_setup();
    const Phantom a = make_random_phantom(17, grid, domain);
    const Phantom b = make_random_phantom(17, grid, domain);
    const Phantom c = make_random_phantom(18, grid, domain);
    CHECK(a.f.v == b.f.v);
    CHECK(a.f.v != c.f.v);
    CHECK(max_abs(a.f) > 0.0);
}

TEST_CASE("tabulated kernel time factor interpolates the table") {
    MemoryKernel k;
    k.family = MemoryKernel::Family::Tabulated;
    k.amplitude = Field(4, 4, 1.0);
    k.table = {1.0, 0.5, 0.25, 0.125, 0.0625};
    k.table_dt = 0.5;
    const auto g = k.time_factor(4, 0.25);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.75)); // halfway between 1 and 0.5
    CHECK(g[2] == doctest::Approx(0.5));
    CHECK_THROWS(k.time_factor(10, 0.5)); // beyond the table
}
