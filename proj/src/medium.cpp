#include "mtat/medium.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace mtat {

std::vector<double> MemoryKernel::time_factor(int nt, double dt) const {
    std::vector<double> g(static_cast<std::size_t>(nt) + 1);
    if (family == Family::Exponential) {
        for (int j = 0; j <= nt; ++j) g[j] = std::exp(-alpha_decay * j * dt);
        return g;
    }
    if (table.empty() || table_dt <= 0.0)
        throw std::invalid_argument("MemoryKernel: tabulated kernel without table");
    const double t_max = (table.size() - 1) * table_dt;
    for (int j = 0; j <= nt; ++j) {
        const double t = j * dt;
        if (t > t_max * (1.0 + 1e-12))
            throw std::invalid_argument("MemoryKernel: table does not cover [0,T]");
        const double pos = std::min(t / table_dt, double(table.size() - 1));
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - i;
        g[j] = (i + 1 < table.size()) ? (1.0 - f) * table[i] + f * table[i + 1]
                                      : table[i];
    }
    return g;
}

bool MemoryKernel::is_zero() const {
    if (max_abs(amplitude) == 0.0) return true;
    if (family == Family::Tabulated) {
        for (double v : table)
            if (v != 0.0) return false;
        return true;
    }
    return false;
}

Field Medium::p_coefficient() const {
    Field p = b;
    if (kernel.is_zero()) return p;
    if (kernel.family == MemoryKernel::Family::Exponential) {
        for (std::size_t i = 0; i < p.v.size(); ++i)
            p.v[i] += kernel.amplitude.v[i] / kernel.alpha_decay;
        return p;
    }
    const std::vector<double> psi0 =
        psi_from_phi_table(kernel.table, kernel.table_dt);
    for (std::size_t i = 0; i < p.v.size(); ++i)
        p.v[i] -= kernel.amplitude.v[i] * psi0[0];
    return p;
}

double domain_cutoff(double inside_distance, double h) {
    const double w = 2.0 * h;
    if (inside_distance <= 0.0) return 0.0;
    if (inside_distance >= w) return 1.0;
    const double t = inside_distance / w;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

Medium make_medium(const CoefficientSpec& spec, const Grid& grid,
                   const DomainDisk& domain) {
    Medium m;
    m.c = Field(grid.nx, grid.ny, 1.0);
    m.a = Field(grid.nx, grid.ny, 0.0);
    m.b = Field(grid.nx, grid.ny, 0.0);
    m.kernel.family = spec.family;
    m.kernel.alpha_decay = spec.alpha_decay;
    m.kernel.table = spec.table;
    m.kernel.table_dt = spec.table_dt;
    m.kernel.amplitude = Field(grid.nx, grid.ny, 0.0);

    if (spec.family == MemoryKernel::Family::Exponential && spec.alpha_decay <= 0.0)
        throw std::invalid_argument("make_medium: alpha_decay must be > 0");

    auto fail = [&](const char* what, int i, int j, double v) {
        throw std::invalid_argument(
            std::string("make_medium: ") + what + " violated at node (" +
            std::to_string(i) + "," + std::to_string(j) + "), value " +
            std::to_string(v));
    };

    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i), y = grid.y(j);
            const double inside = domain.radius - dist({x, y}, domain.center);
            const double chi = domain_cutoff(inside, grid.h);
            const std::size_t k = m.c.idx(i, j);
            if (chi > 0.0) {
                const double cv = 1.0 + chi * (spec.c(x, y) - 1.0);
                const double av = chi * spec.a(x, y);
                const double bv = chi * spec.b(x, y);
                const double qv = chi * spec.q(x, y);
                if (cv <= 0.0) fail("c > 0", i, j, cv);
                if (av < 0.0) fail("a >= 0", i, j, av);
                if (bv < 0.0) fail("b >= 0", i, j, bv);
                if (qv < 0.0) fail("q >= 0", i, j, qv);
                m.c.v[k] = cv;
                m.a.v[k] = av;
                m.b.v[k] = bv;
                m.kernel.amplitude.v[k] = qv;
            }
        }
    }
    double cmin = m.c.v[0], cmax = m.c.v[0];
    for (double v : m.c.v) {
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
    }
    m.c0 = std::min(cmin, 1.0 / cmax);
    m.c_max = cmax;
    return m;
}

SpeedConditionReport check_speed_condition(const Medium& medium, Vec2 x0,
                                           const Grid& grid,
                                           const DomainDisk& domain) {
    const Mask disk = closed_disk_mask(domain, grid);
    SpeedConditionReport rep;
    double margin = std::numeric_limits<double>::infinity();
    for (int j = 1; j < grid.ny - 1; ++j) {
        for (int i = 1; i < grid.nx - 1; ++i) {
            if (!disk[medium.c.idx(i, j)]) continue;
            const double cx =
                (medium.c.at(i + 1, j) - medium.c.at(i - 1, j)) / (2.0 * grid.h);
            const double cy =
                (medium.c.at(i, j + 1) - medium.c.at(i, j - 1)) / (2.0 * grid.h);
            const double dot = (grid.x(i) - x0.x) * cx + (grid.y(j) - x0.y) * cy;
            margin = std::min(margin, medium.c.at(i, j) - dot);
        }
    }
    rep.margin = margin;
    rep.ok = margin > 0.0;
    return rep;
}

AttenuationReport check_attenuation_condition(const MemoryKernel& kernel,
                                              double T, double dt,
                                              int n_probes, std::uint64_t seed) {
    const int nt = std::max(2, static_cast<int>(std::llround(T / dt)));
    const std::vector<double> g = kernel.time_factor(nt, dt);
    double gmax = 0.0;
    for (double v : g) gmax = std::max(gmax, std::abs(v));

    AttenuationReport rep;
    const double tol0 = 1e-10 * std::max(gmax, 1e-300);
    const double tol1 = tol0 / dt;
    const double tol2 = tol1 / dt;

    double w0 = 0.0, w1 = 0.0, w2 = 0.0;
    for (int j = 0; j <= nt; ++j) w0 = std::min(w0, g[j]);
    for (int j = 0; j < nt; ++j) w1 = std::max(w1, (g[j + 1] - g[j]) / dt);
    for (int j = 1; j < nt; ++j)
        w2 = std::min(w2, (g[j + 1] - 2.0 * g[j] + g[j - 1]) / (dt * dt));
    rep.worst_value = w0;
    rep.worst_first_difference = w1;
    rep.worst_second_difference = w2;
    rep.value_sign_ok = w0 >= -tol0;
    rep.first_difference_ok = w1 <= tol1;
    rep.second_difference_ok = w2 >= -tol2;

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    auto uniform = [&rng]() {
        return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    };
    double worst_q = 0.0;
    bool pd_ok = true;
    std::vector<double> y(g.size());
    for (int p = 0; p < n_probes; ++p) {
        double energy = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = uniform();
        for (int j = 0; j <= nt; ++j)
            energy += trapezoid_weight(j, nt) * y[j] * y[j] * dt;
        const double qf = quadratic_form(g, y, dt);
        const double tol_pd = 1e-8 * std::max(gmax, 1e-300) * T * energy;
        if (qf < worst_q) worst_q = qf;
        if (qf < -tol_pd) pd_ok = false;
    }
    rep.worst_quadratic_form = worst_q;
    rep.quadratic_form_ok = pd_ok;
    rep.probes = n_probes;
    return rep;
}

MemoryKernel psi_from_phi(const MemoryKernel& kernel) {
    MemoryKernel psi;
    psi.family = kernel.family;
    psi.alpha_decay = kernel.alpha_decay;
    psi.amplitude = kernel.amplitude;
    if (kernel.is_zero()) {
        for (double& v : psi.amplitude.v) v = 0.0;
        psi.table = kernel.table;
        psi.table_dt = kernel.table_dt;
        for (double& v : psi.table) v = 0.0;
        return psi;
    }
    if (kernel.family == MemoryKernel::Family::Exponential) {
        for (double& v : psi.amplitude.v) v = -v / kernel.alpha_decay;
        return psi;
    }
    psi.table = psi_from_phi_table(kernel.table, kernel.table_dt);
    psi.table_dt = kernel.table_dt;
    return psi;
}

namespace {

double feature_extent(PhantomKind kind, const PhantomFeature& f) {
    switch (kind) {
        case PhantomKind::GaussianBumps: return 3.0 * f.r0;
        case PhantomKind::SmoothedDisks: return f.r0;
        case PhantomKind::Annulus: return f.r1;
    }
    return 0.0;
}

} // namespace

Phantom make_phantom(PhantomKind kind, const std::vector<PhantomFeature>& features,
                     const Grid& grid, const DomainDisk& domain) {
    for (const auto& f : features) {
        const Vec2 ctr = (kind == PhantomKind::Annulus)
                             ? domain.center
                             : Vec2{f.cx, f.cy};
        const double reach = dist(ctr, domain.center) + feature_extent(kind, f);
        if (reach >= domain.radius)
            throw std::invalid_argument(
                "make_phantom: feature overlaps the domain boundary");
        if (kind == PhantomKind::Annulus && f.r1 <= f.r0)
            throw std::invalid_argument("make_phantom: annulus needs r1 > r0");
        if (f.r0 <= 0.0 && kind != PhantomKind::Annulus)
            throw std::invalid_argument("make_phantom: feature size must be > 0");
    }

    Phantom ph;
    ph.f = Field(grid.nx, grid.ny, 0.0);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double x = grid.x(i), y = grid.y(j);
            const double inside = domain.radius - dist({x, y}, domain.center);
            const double chi = domain_cutoff(inside, grid.h);
            if (chi == 0.0) continue;
            double val = 0.0;
            for (const auto& f : features) {
                switch (kind) {
                    case PhantomKind::GaussianBumps: {
                        const double r2 = (x - f.cx) * (x - f.cx) + (y - f.cy) * (y - f.cy);
                        val += f.amplitude * std::exp(-r2 / (f.r0 * f.r0));
                        break;
                    }
                    case PhantomKind::SmoothedDisks: {
                        const double r = std::hypot(x - f.cx, y - f.cy);
                        const double edge = 2.0 * grid.h;
                        val += f.amplitude * domain_cutoff(f.r0 - r + edge, grid.h);
                        break;
                    }
                    case PhantomKind::Annulus: {
                        const double r = dist({x, y}, domain.center);
                        const double edge = 2.0 * grid.h;
                        const double in = domain_cutoff(r - f.r0 + edge, grid.h);
                        const double out = domain_cutoff(f.r1 - r + edge, grid.h);
                        val += f.amplitude * in * out;
                        break;
                    }
                }
            }
            ph.f.v[ph.f.idx(i, j)] = chi * val;
        }
    }
    return ph;
}

Phantom make_random_phantom(std::uint64_t seed, const Grid& grid,
                            const DomainDisk& domain) {
    std::mt19937_64 rng(seed * 0x2545f4914f6cdd1dULL + 0x123456789abcdefULL);
    auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const int n_bumps = 1 + static_cast<int>(rng() % 3);
    std::vector<PhantomFeature> feats;
    for (int b = 0; b < n_bumps; ++b) {
        PhantomFeature f;
        const double w = domain.radius * (0.12 + 0.10 * unit());
        const double rmax = std::max(0.0, domain.radius - 3.0 * w - 2.5 * grid.h);
        const double r = rmax * std::sqrt(unit());
        const double th = 2.0 * std::numbers::pi * unit();
        f.cx = domain.center.x + r * std::cos(th);
        f.cy = domain.center.y + r * std::sin(th);
        f.r0 = w;
        f.amplitude = 0.5 + unit();
        feats.push_back(f);
    }
    return make_phantom(PhantomKind::GaussianBumps, feats, grid, domain);
}

} // namespace mtat
