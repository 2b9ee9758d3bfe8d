#include "mtat/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "kernel_term.hpp"
#include "mtat/threading.hpp"

namespace mtat {

namespace {

using detail::KernelTerm;

double disk_inside_depth(const DomainDisk& d, double x, double y) {
    return d.radius - std::hypot(x - d.center.x, y - d.center.y);
}

} // namespace

DiskIndex build_disk_index(const DomainDisk& domain, const Grid& grid) {
    DiskIndex di;
    const double two_pi = 2.0 * std::numbers::pi;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double depth = disk_inside_depth(domain, grid.x(i), grid.y(j));
            if (depth <= 0.0) continue;
            const int k = j * grid.nx + i;
            if (depth > grid.h) {
                di.solve_nodes.push_back(k);
            } else {
                di.band_nodes.push_back(k);
                double th = std::atan2(grid.y(j) - domain.center.y,
                                       grid.x(i) - domain.center.x);
                if (th < 0.0) th += two_pi;
                const double pos = th / two_pi * domain.n_boundary;
                int k0 = static_cast<int>(pos) % domain.n_boundary;
                di.band_k0.push_back(k0);
                di.band_frac.push_back(pos - std::floor(pos));
            }
        }
    }
    return di;
}

std::vector<double> band_values(const DiskIndex& index,
                                const std::vector<double>& circle_values) {
    const int nb = static_cast<int>(circle_values.size());
    std::vector<double> out(index.band_nodes.size());
    for (std::size_t s = 0; s < index.band_nodes.size(); ++s) {
        const int k0 = index.band_k0[s];
        const double f = index.band_frac[s];
        out[s] = (1.0 - f) * circle_values[k0] + f * circle_values[(k0 + 1) % nb];
    }
    return out;
}

HarmonicExtension harmonic_extension(const std::vector<double>& circle_values,
                                     const Grid& grid, const DomainDisk& domain,
                                     double tol_harm) {
    for (double v : circle_values)
        if (!std::isfinite(v))
            throw std::invalid_argument("harmonic_extension: non-finite boundary data");
    if (static_cast<int>(circle_values.size()) != domain.n_boundary)
        throw std::invalid_argument("harmonic_extension: boundary data size mismatch");

    const DiskIndex di = build_disk_index(domain, grid);
    const std::vector<double> bvals = band_values(di, circle_values);

    HarmonicExtension ext;
    ext.phi = Field(grid.nx, grid.ny, 0.0);
    for (std::size_t s = 0; s < di.band_nodes.size(); ++s)
        ext.phi.v[di.band_nodes[s]] = bvals[s];

    const std::size_t n = di.solve_nodes.size();
    if (n == 0) return ext;

    // slot map: grid index -> unknown index, -1 for injected/outside nodes
    std::vector<int> slot(ext.phi.v.size(), -1);
    for (std::size_t s = 0; s < n; ++s) slot[di.solve_nodes[s]] = static_cast<int>(s);

    const int nx = grid.nx;
    auto apply_A = [&](const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t s = 0; s < n; ++s) {
            const int k = di.solve_nodes[s];
            double acc = 4.0 * x[s];
            for (const int nb : {k - 1, k + 1, k - nx, k + nx}) {
                const int sl = slot[nb];
                if (sl >= 0) acc -= x[sl];
            }
            y[s] = acc;
        }
    };

    // rhs from the Dirichlet band
    std::vector<double> rhs(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const int k = di.solve_nodes[s];
        double acc = 0.0;
        for (const int nb : {k - 1, k + 1, k - nx, k + nx})
            if (slot[nb] < 0) acc += ext.phi.v[nb];
        rhs[s] = acc;
    }

    double rhs_norm = 0.0;
    for (double v : rhs) rhs_norm += v * v;
    rhs_norm = std::sqrt(rhs_norm);
    if (rhs_norm == 0.0) return ext; // zero data extends to zero

    // plain CG on the SPD 5-point system, warm-started at the data mean
    double mean = 0.0;
    for (double v : circle_values) mean += v;
    mean /= circle_values.size();

    std::vector<double> x(n, mean), r(n), p(n), Ap(n);
    apply_A(x, Ap);
    for (std::size_t s = 0; s < n; ++s) r[s] = rhs[s] - Ap[s];
    p = r;
    double rr = 0.0;
    for (double v : r) rr += v * v;
    const double stop2 = tol_harm * tol_harm * rhs_norm * rhs_norm;
    const int max_iters = 40000;
    int it = 0;
    while (rr > stop2 && it < max_iters) {
        apply_A(p, Ap);
        double pAp = 0.0;
        for (std::size_t s = 0; s < n; ++s) pAp += p[s] * Ap[s];
        const double alpha = rr / pAp;
        for (std::size_t s = 0; s < n; ++s) {
            x[s] += alpha * p[s];
            r[s] -= alpha * Ap[s];
        }
        double rr_new = 0.0;
        for (double v : r) rr_new += v * v;
        const double beta = rr_new / rr;
        for (std::size_t s = 0; s < n; ++s) p[s] = r[s] + beta * p[s];
        rr = rr_new;
        ++it;
    }
    if (rr > stop2)
        throw std::runtime_error("harmonic_extension: CG did not converge in " +
                                 std::to_string(max_iters) + " iterations");
    for (std::size_t s = 0; s < n; ++s) ext.phi.v[di.solve_nodes[s]] = x[s];
    ext.residual = std::sqrt(rr) / rhs_norm;
    ext.iterations = it;
    return ext;
}

TimeReversalResult solve_time_reversal(const Medium& medium,
                                       const BoundaryTrace& hbar,
                                       const Grid& grid,
                                       const DomainDisk& domain,
                                       const SolveOptions& opts) {
    if (hbar.kind != BoundaryTrace::Kind::Integrated)
        throw std::invalid_argument("solve_time_reversal: trace kind must be integrated");
    if (hbar.n_time != grid.nt + 1 || std::abs(hbar.dt - grid.dt) > 1e-14 * grid.dt)
        throw std::invalid_argument("solve_time_reversal: trace/grid time axis mismatch");
    if (hbar.n_boundary != domain.n_boundary)
        throw std::invalid_argument("solve_time_reversal: boundary sample count mismatch");
    const Field p = medium.p_coefficient();
    for (double v : p.v)
        if (v < 0.0)
            throw std::invalid_argument("solve_time_reversal: p = b - Psi(0,.) negative");

    const int nx = grid.nx, nt = grid.nt;
    const double dt = grid.dt, h = grid.h;
    const std::size_t n_nodes = static_cast<std::size_t>(nx) * grid.ny;
    ThreadPool pool(opts.threads);

    const DiskIndex di = build_disk_index(domain, grid);

    // reversed Dirichlet data: level n of the reversed clock reads row nt-n
    auto trace_row = [&](int n) {
        std::vector<double> circle(hbar.n_boundary);
        for (int k = 0; k < hbar.n_boundary; ++k) circle[k] = hbar.at(nt - n, k);
        return band_values(di, circle);
    };

    // final-time data: harmonic extension of hbar(T, .)
    std::vector<double> circle_T(hbar.n_boundary);
    for (int k = 0; k < hbar.n_boundary; ++k) circle_T[k] = hbar.at(nt, k);

    TimeReversalResult res;
    res.extension = harmonic_extension(circle_T, grid, domain);

    std::vector<double> v_prev = res.extension.phi.v; // reversed level 0
    std::vector<double> v_curr(n_nodes, 0.0), v_next(n_nodes, 0.0);

    std::vector<double> c2(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k)
        c2[k] = medium.c.v[k] * medium.c.v[k];
    const std::vector<double>& a = medium.a.v;
    const double inv_h2 = 1.0 / (h * h);

    // Taylor seed with zero initial velocity: v^1 = phi + (dt^2/2) v_ss(0),
    // v_ss(0) = c^2 Lap phi - p phi.
    const int n_solve = static_cast<int>(di.solve_nodes.size());
    pool.parallel_for(0, n_solve, [&](int sb, int se, int) {
        for (int s = sb; s < se; ++s) {
            const int k = di.solve_nodes[s];
            const double lap = (v_prev[k - 1] + v_prev[k + 1] + v_prev[k - nx] +
                                v_prev[k + nx] - 4.0 * v_prev[k]) * inv_h2;
            v_curr[k] = v_prev[k] + 0.5 * dt * dt * (c2[k] * lap - p.v[k] * v_prev[k]);
        }
    });
    {
        const std::vector<double> b1 = trace_row(1);
        for (std::size_t s = 0; s < di.band_nodes.size(); ++s)
            v_curr[di.band_nodes[s]] = b1[s];
    }

    const MemoryKernel psi = psi_from_phi(medium.kernel);
    KernelTerm kterm;
    kterm.init(KernelTerm::Mode::OnDifference, psi, n_nodes, nt, dt);
    kterm.push(v_prev, v_curr);

    for (int n = 1; n < nt; ++n) {
        const std::vector<double>& K = kterm.refresh();
        pool.parallel_for(0, n_solve, [&](int sb, int se, int) {
            for (int s = sb; s < se; ++s) {
                const int k = di.solve_nodes[s];
                const double lap = (v_curr[k - 1] + v_curr[k + 1] + v_curr[k - nx] +
                                    v_curr[k + nx] - 4.0 * v_curr[k]) * inv_h2;
                const double ad2 = 0.5 * a[k] * dt;
                v_next[k] = (2.0 * v_curr[k] - (1.0 - ad2) * v_prev[k] +
                             dt * dt * (c2[k] * lap - p.v[k] * v_curr[k] - K[k])) /
                            (1.0 + ad2);
            }
        });
        const std::vector<double> bn = trace_row(n + 1);
        for (std::size_t s = 0; s < di.band_nodes.size(); ++s)
            v_next[di.band_nodes[s]] = bn[s];

        kterm.push(v_curr, v_next);
        std::swap(v_prev, v_curr);
        std::swap(v_curr, v_next);
    }

    // v_t(t=0) = -d/ds v at the reversed end, one-sided second order.
    res.A_out = Field(grid.nx, grid.ny, 0.0);
    res.v_at_t0 = Field(grid.nx, grid.ny, 0.0);
    const Mask& mask = domain.interior_mask;
    if (nt >= 2) {
        const double inv2dt = 1.0 / (2.0 * dt);
        for (std::size_t k = 0; k < n_nodes; ++k) {
            if (!mask[k]) continue;
            res.A_out.v[k] = -(3.0 * v_curr[k] - 4.0 * v_prev[k] + v_next[k]) * inv2dt;
            res.v_at_t0.v[k] = v_curr[k];
        }
    } else {
        for (std::size_t k = 0; k < n_nodes; ++k) {
            if (!mask[k]) continue;
            res.A_out.v[k] = -(v_curr[k] - v_prev[k]) / dt;
            res.v_at_t0.v[k] = v_curr[k];
        }
    }
    return res;
}

Field apply_K(const Medium& medium, const Field& f, const Grid& grid,
              const DomainDisk& domain, const SolveOptions& opts) {
    SolveOptions o = opts;
    o.compute_energies = false;
    o.snapshot_stride = 0;
    Phantom ph;
    ph.f = f;
    const ForwardResult fwd = solve_forward(medium, ph, grid, domain, o);
    const BoundaryTrace hbar = integrate_trace(fwd.trace);
    const TimeReversalResult tr = solve_time_reversal(medium, hbar, grid, domain, o);
    Field out(grid.nx, grid.ny, 0.0);
    for (std::size_t k = 0; k < out.v.size(); ++k)
        if (domain.interior_mask[k]) out.v[k] = f.v[k] - tr.A_out.v[k];
    return out;
}

NeumannResult neumann_reconstruct(const Medium& medium, const BoundaryTrace& hbar,
                                  const Grid& grid, const DomainDisk& domain,
                                  int m_max, double tol_rel,
                                  const SolveOptions& opts) {
    if (m_max < 1) throw std::invalid_argument("neumann_reconstruct: m_max must be >= 1");
    const auto t_start = std::chrono::steady_clock::now();

    NeumannResult res;
    const TimeReversalResult tr0 = solve_time_reversal(medium, hbar, grid, domain, opts);
    res.f_hat = tr0.A_out;
    Field g = tr0.A_out;

    const Mask& mask = domain.interior_mask;
    auto norm = [&](const Field& x) {
        return weighted_l2_norm(x, medium.c, mask, grid.h);
    };

    double g_norm = norm(g);
    res.report.residual_norms.push_back(g_norm);
    int bad_streak = 0;
    for (int m = 1; m <= m_max; ++m) {
        const double fhat_norm = norm(res.f_hat);
        res.report.final_rel_residual = g_norm / std::max(fhat_norm, 1e-300);
        if (res.report.final_rel_residual < tol_rel) {
            res.report.converged = true;
            break;
        }
        g = apply_K(medium, g, grid, domain, opts);
        const double g_norm_new = norm(g);
        const double ratio = g_norm_new / std::max(g_norm, 1e-300);
        res.report.ratios.push_back(ratio);
        res.report.residual_norms.push_back(g_norm_new);
        g_norm = g_norm_new;
        for (std::size_t k = 0; k < res.f_hat.v.size(); ++k)
            res.f_hat.v[k] += g.v[k];
        res.report.iterations = m;

        bad_streak = ratio > 1.05 ? bad_streak + 1 : 0;
        if (bad_streak >= 3) {
            const TimeBounds tb =
                uniqueness_times(medium.c, domain.center, domain, grid);
            throw std::runtime_error(
                "neumann_reconstruct: diverging (ratio > 1.05 for 3 consecutive "
                "iterates). T = " + std::to_string(grid.T()) +
                ", uniqueness time D/c0 = " + std::to_string(tb.T_uniqueness) +
                ", damped-case threshold 2*D/(alpha*c0) = " +
                std::to_string(2.0 * tb.T1_halfbound) +
                "; T is likely below the reconstruction threshold");
        }
    }
    res.report.seconds_total =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return res;
}

ContractionEstimate contraction_estimate(const Medium& medium, const Grid& grid,
                                         const DomainDisk& domain, double T,
                                         int n_samples, std::uint64_t seed,
                                         const SolveOptions& opts) {
    if (n_samples < 1)
        throw std::invalid_argument("contraction_estimate: n_samples must be >= 1");
    if (std::abs(T - grid.T()) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("contraction_estimate: T does not match the grid");
    ContractionEstimate est;
    for (int s = 0; s < n_samples; ++s) {
        const Phantom ph = make_random_phantom(seed + s, grid, domain);
        const double fn =
            weighted_l2_norm(ph.f, medium.c, domain.interior_mask, grid.h);
        if (fn == 0.0) continue;
        const Field kf = apply_K(medium, ph.f, grid, domain, opts);
        const double kn =
            weighted_l2_norm(kf, medium.c, domain.interior_mask, grid.h);
        est.ratios.push_back(kn / fn);
        est.rho_max = std::max(est.rho_max, kn / fn);
    }
    return est;
}

} // namespace mtat
