#include "mtat/forward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mtat/threading.hpp"
#include "kernel_term.hpp"

namespace mtat {

namespace {

using detail::KernelTerm;

struct EnergySums {
    double E_box{0.0};
    double E_omega{0.0};
    double rate_damp{0.0};
    double rate_mem{0.0};
    double rate_mem_pd{0.0};
};

EnergySums energy_pass(const std::vector<double>& u,
                       const std::vector<double>& udot,
                       const std::vector<double>& inv_c2,
                       const std::vector<double>& a,
                       const std::vector<double>& pot,
                       const std::vector<double>* kterm,
                       const std::vector<double>* kterm_pd, const Mask& omega,
                       const Grid& grid, ThreadPool& pool) {
    const int nx = grid.nx, ny = grid.ny;
    const double h = grid.h;
    const double inv2h = 1.0 / (2.0 * h);
    std::vector<EnergySums> partial(pool.size());
    pool.parallel_for(0, ny, [&](int jb, int je, int chunk) {
        EnergySums s;
        for (int j = jb; j < je; ++j) {
            for (int i = 0; i < nx; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                double gx, gy;
                if (i == 0) gx = (u[k + 1] - u[k]) / h;
                else if (i == nx - 1) gx = (u[k] - u[k - 1]) / h;
                else gx = (u[k + 1] - u[k - 1]) * inv2h;
                if (j == 0) gy = (u[k + nx] - u[k]) / h;
                else if (j == ny - 1) gy = (u[k] - u[k - nx]) / h;
                else gy = (u[k + nx] - u[k - nx]) * inv2h;
                const double e = gx * gx + gy * gy +
                                 inv_c2[k] * (pot[k] * u[k] * u[k] + udot[k] * udot[k]);
                s.E_box += e;
                if (omega[k]) s.E_omega += e;
                s.rate_damp += 2.0 * a[k] * inv_c2[k] * udot[k] * udot[k];
                if (kterm) s.rate_mem += 2.0 * inv_c2[k] * (*kterm)[k] * udot[k];
                if (kterm_pd) s.rate_mem_pd += 2.0 * inv_c2[k] * (*kterm_pd)[k] * udot[k];
            }
        }
        partial[chunk] = s;
    });
    EnergySums out;
    for (const auto& s : partial) {
        out.E_box += s.E_box;
        out.E_omega += s.E_omega;
        out.rate_damp += s.rate_damp;
        out.rate_mem += s.rate_mem;
        out.rate_mem_pd += s.rate_mem_pd;
    }
    const double h2 = h * h;
    out.E_box *= h2;
    out.E_omega *= h2;
    out.rate_damp *= h2;
    out.rate_mem *= h2;
    out.rate_mem_pd *= h2;
    return out;
}

/// Trapezoid-in-time accumulator for a dissipation rate.
struct DissAccum {
    double cum{0.0};
    double prev_rate{0.0};
    bool started{false};

    double add(double rate, double dt) {
        if (started) cum += 0.5 * dt * (prev_rate + rate);
        started = true;
        prev_rate = rate;
        return cum;
    }
};

void apply_wall(std::vector<double>& u_next, const std::vector<double>& u_curr,
                SolveOptions::Wall wall, const Grid& grid) {
    const int nx = grid.nx, ny = grid.ny;
    auto idx = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };
    if (wall == SolveOptions::Wall::Hard) {
        for (int i = 0; i < nx; ++i) {
            u_next[idx(i, 0)] = 0.0;
            u_next[idx(i, ny - 1)] = 0.0;
        }
        for (int j = 0; j < ny; ++j) {
            u_next[idx(0, j)] = 0.0;
            u_next[idx(nx - 1, j)] = 0.0;
        }
        return;
    }
    // First-order outflow at unit speed (coefficients vanish outside the
    // disk, so c = 1 at the walls).  Residual reflection grows with the
    // angle of incidence.
    const double lam = grid.dt / grid.h;
    for (int j = 1; j < ny - 1; ++j) {
        u_next[idx(0, j)] = u_curr[idx(0, j)] + lam * (u_curr[idx(1, j)] - u_curr[idx(0, j)]);
        u_next[idx(nx - 1, j)] = u_curr[idx(nx - 1, j)] +
                                 lam * (u_curr[idx(nx - 2, j)] - u_curr[idx(nx - 1, j)]);
    }
    for (int i = 1; i < nx - 1; ++i) {
        u_next[idx(i, 0)] = u_curr[idx(i, 0)] + lam * (u_curr[idx(i, 1)] - u_curr[idx(i, 0)]);
        u_next[idx(i, ny - 1)] = u_curr[idx(i, ny - 1)] +
                                 lam * (u_curr[idx(i, ny - 2)] - u_curr[idx(i, ny - 1)]);
    }
    const double lam_d = grid.dt / (std::numbers::sqrt2 * grid.h);
    u_next[idx(0, 0)] = u_curr[idx(0, 0)] + lam_d * (u_curr[idx(1, 1)] - u_curr[idx(0, 0)]);
    u_next[idx(nx - 1, 0)] = u_curr[idx(nx - 1, 0)] +
                             lam_d * (u_curr[idx(nx - 2, 1)] - u_curr[idx(nx - 1, 0)]);
    u_next[idx(0, ny - 1)] = u_curr[idx(0, ny - 1)] +
                             lam_d * (u_curr[idx(1, ny - 2)] - u_curr[idx(0, ny - 1)]);
    u_next[idx(nx - 1, ny - 1)] =
        u_curr[idx(nx - 1, ny - 1)] +
        lam_d * (u_curr[idx(nx - 2, ny - 2)] - u_curr[idx(nx - 1, ny - 1)]);
}

void check_cfl(const Medium& medium, const Grid& grid) {
    const double cfl = medium.c_max * grid.dt * std::numbers::sqrt2 / grid.h;
    if (cfl > 1.0 + 1e-9)
        throw std::invalid_argument("solver: CFL violated, c_max*dt*sqrt(2)/h = " +
                                    std::to_string(cfl));
}

void check_support(const Field& f, const DomainDisk& domain, const Grid& grid) {
    const Mask closed = closed_disk_mask(domain, grid);
    for (std::size_t k = 0; k < f.v.size(); ++k)
        if (!closed[k] && f.v[k] != 0.0)
            throw std::invalid_argument("solver: initial data not supported in the disk");
}

ForwardResult run_box_solver(const Medium& medium, const Field& f0,
                             const Field& v0, const Field& pot,
                             KernelTerm::Mode kmode, const MemoryKernel& kernel,
                             const Grid& grid, const DomainDisk& domain,
                             const SolveOptions& opts,
                             BoundaryTrace::Kind trace_kind) {
    check_cfl(medium, grid);
    const int nx = grid.nx, ny = grid.ny, nt = grid.nt;
    const double dt = grid.dt, h = grid.h;
    const std::size_t n_nodes = static_cast<std::size_t>(nx) * ny;

    ThreadPool pool(opts.threads);
    const BoundarySampling sampling = boundary_sampling(domain, grid);

    std::vector<double> inv_c2(n_nodes), c2(n_nodes);
    for (std::size_t k = 0; k < n_nodes; ++k) {
        c2[k] = medium.c.v[k] * medium.c.v[k];
        inv_c2[k] = 1.0 / c2[k];
    }
    const std::vector<double>& a = medium.a.v;

    ForwardResult res;
    res.trace.kind = trace_kind;
    res.trace.n_time = nt + 1;
    res.trace.n_boundary = domain.n_boundary;
    res.trace.dt = dt;
    res.trace.radius = domain.radius;
    res.trace.values.assign(static_cast<std::size_t>(nt + 1) * domain.n_boundary, 0.0);

    auto sample_trace = [&](int n, const std::vector<double>& u) {
        for (int k = 0; k < domain.n_boundary; ++k) {
            const auto& p = sampling.points[k];
            const std::size_t base = static_cast<std::size_t>(p.j0) * nx + p.i0;
            res.trace.at(n, k) = p.w00 * u[base] + p.w10 * u[base + 1] +
                                 p.w01 * u[base + nx] + p.w11 * u[base + nx + 1];
        }
    };
    auto take_snapshot = [&](const std::vector<double>& u, double t) {
        Field snap(nx, ny);
        snap.v = u;
        res.snapshots.push_back(std::move(snap));
        res.snapshot_times.push_back(t);
    };

    std::vector<double> u_prev = f0.v, u_curr(n_nodes, 0.0), u_next(n_nodes, 0.0);
    const double inv_h2 = 1.0 / (h * h);

    // Taylor-seeded first step: u^1 = u^0 + dt v0 + (dt^2/2) u_tt(0) with
    // u_tt(0) = c^2 Lap u^0 - a v0 - pot u^0; the memory term vanishes at 0.
    pool.parallel_for(1, ny - 1, [&](int jb, int je, int) {
        for (int j = jb; j < je; ++j) {
            for (int i = 1; i < nx - 1; ++i) {
                const std::size_t k = static_cast<std::size_t>(j) * nx + i;
                const double lap = (u_prev[k - 1] + u_prev[k + 1] + u_prev[k - nx] +
                                    u_prev[k + nx] - 4.0 * u_prev[k]) * inv_h2;
                const double utt = c2[k] * lap - a[k] * v0.v[k] - pot.v[k] * u_prev[k];
                u_curr[k] = u_prev[k] + dt * v0.v[k] + 0.5 * dt * dt * utt;
            }
        }
    });
    apply_wall(u_curr, u_prev, opts.wall, grid);

    KernelTerm kterm;
    kterm.init(kmode, kernel, n_nodes, nt, dt);
    kterm.push_initial(u_prev);
    kterm.push(u_prev, u_curr); // state now covers level 1

    KernelTerm kterm_pd;
    const bool separate_pd =
        opts.compute_energies && kmode == KernelTerm::Mode::OnField && kterm.active();
    std::vector<double> udot = v0.v, udot_prev = v0.v;
    if (separate_pd) {
        kterm_pd.init(KernelTerm::Mode::OnField, kernel, n_nodes, nt, dt);
        kterm_pd.push_initial(udot);
    }

    EnergyTrace& et = res.energy;
    DissAccum acc_damp, acc_mem, acc_pd;
    auto push_energy = [&](int n, const EnergySums& s) {
        et.t.push_back(n * dt);
        et.E_box.push_back(s.E_box);
        et.E_omega.push_back(s.E_omega);
        et.E_omega_c.push_back(s.E_box - s.E_omega);
        et.diss_damping.push_back(acc_damp.add(s.rate_damp, dt));
        et.diss_memory.push_back(acc_mem.add(s.rate_mem, dt));
        et.diss_memory_pd.push_back(
            acc_pd.add(separate_pd ? s.rate_mem_pd : s.rate_mem, dt));
        et.extended.push_back(et.E_box.back() + et.diss_damping.back() +
                              et.diss_memory.back());
    };

    sample_trace(0, u_prev);
    sample_trace(1, u_curr);
    if (opts.compute_energies) {
        // Level 0: the memory term is identically zero.
        push_energy(0, energy_pass(u_prev, udot, inv_c2, a, pot.v, nullptr,
                                   nullptr, domain.interior_mask, grid, pool));
    }
    if (opts.snapshot_stride > 0) take_snapshot(u_prev, 0.0);

    const double blowup_scale = std::max(max_abs(f0) + dt * max_abs(v0), 1e-12);

    for (int n = 1; n < nt; ++n) {
        const std::vector<double>& K = kterm.refresh(); // term at level n

        pool.parallel_for(1, ny - 1, [&](int jb, int je, int) {
            for (int j = jb; j < je; ++j) {
                const std::size_t row = static_cast<std::size_t>(j) * nx;
                for (int i = 1; i < nx - 1; ++i) {
                    const std::size_t k = row + i;
                    const double lap = (u_curr[k - 1] + u_curr[k + 1] + u_curr[k - nx] +
                                        u_curr[k + nx] - 4.0 * u_curr[k]) * inv_h2;
                    const double ad2 = 0.5 * a[k] * dt;
                    u_next[k] = (2.0 * u_curr[k] - (1.0 - ad2) * u_prev[k] +
                                 dt * dt * (c2[k] * lap - pot.v[k] * u_curr[k] - K[k])) /
                                (1.0 + ad2);
                }
            }
        });
        apply_wall(u_next, u_curr, opts.wall, grid);
        sample_trace(n + 1, u_next);

        if (opts.compute_energies) {
            const double inv2dt = 1.0 / (2.0 * dt);
            for (std::size_t k = 0; k < n_nodes; ++k)
                udot[k] = (u_next[k] - u_prev[k]) * inv2dt;
            const std::vector<double>* pd = nullptr;
            if (separate_pd) {
                kterm_pd.push(udot_prev, udot);
                pd = &kterm_pd.refresh();
            }
            push_energy(n, energy_pass(u_curr, udot, inv_c2, a, pot.v, &K, pd,
                                       domain.interior_mask, grid, pool));
            std::swap(udot_prev, udot);
        }

        kterm.push(u_curr, u_next);
        std::swap(u_prev, u_curr);
        std::swap(u_curr, u_next);

        if ((n & 15) == 0) {
            double m = 0.0;
            for (double x : u_curr) m = std::max(m, std::abs(x));
            if (m > 1e6 * blowup_scale)
                throw std::runtime_error("solver: field blow-up detected at step " +
                                         std::to_string(n + 1));
        }
        if (opts.snapshot_stride > 0 && ((n + 1) % opts.snapshot_stride == 0))
            take_snapshot(u_curr, (n + 1) * dt);
    }

    // After the final swap u_curr = level nt, u_prev = nt-1, u_next = nt-2.
    res.u_final = Field(nx, ny);
    res.u_final.v = u_curr;
    res.ut_final = Field(nx, ny);
    if (nt >= 2) {
        const double inv2dt = 1.0 / (2.0 * dt);
        for (std::size_t k = 0; k < n_nodes; ++k)
            res.ut_final.v[k] = (3.0 * u_curr[k] - 4.0 * u_prev[k] + u_next[k]) * inv2dt;
    } else {
        for (std::size_t k = 0; k < n_nodes; ++k)
            res.ut_final.v[k] = (u_curr[k] - u_prev[k]) / dt;
    }
    if (opts.compute_energies) {
        const std::vector<double>& K = kterm.refresh(); // level nt
        const std::vector<double>* pd = nullptr;
        if (separate_pd) {
            kterm_pd.push(udot_prev, res.ut_final.v);
            pd = &kterm_pd.refresh();
        }
        push_energy(nt, energy_pass(u_curr, res.ut_final.v, inv_c2, a, pot.v, &K,
                                    pd, domain.interior_mask, grid, pool));
    }
    return res;
}

} // namespace

ForwardResult solve_forward(const Medium& medium, const Phantom& f,
                            const Grid& grid, const DomainDisk& domain,
                            const SolveOptions& opts) {
    if (!f.f.same_shape(medium.c))
        throw std::invalid_argument("solve_forward: phantom/grid shape mismatch");
    check_support(f.f, domain, grid);
    Field v0(grid.nx, grid.ny);
    for (std::size_t k = 0; k < v0.v.size(); ++k)
        v0.v[k] = -medium.a.v[k] * f.f.v[k];
    return run_box_solver(medium, f.f, v0, medium.b, KernelTerm::Mode::OnField,
                          medium.kernel, grid, domain, opts,
                          BoundaryTrace::Kind::Raw);
}

ForwardResult solve_integrated_forward(const Medium& medium, const Phantom& f,
                                       const Grid& grid, const DomainDisk& domain,
                                       const SolveOptions& opts,
                                       IntegratedKernelForm form) {
    if (!f.f.same_shape(medium.c))
        throw std::invalid_argument("solve_integrated_forward: shape mismatch");
    check_support(f.f, domain, grid);
    const Field p = medium.p_coefficient();
    for (double v : p.v)
        if (v < 0.0)
            throw std::invalid_argument(
                "solve_integrated_forward: p = b - Psi(0,.) is negative somewhere");
    Field zero(grid.nx, grid.ny, 0.0);
    if (form == IntegratedKernelForm::PhiOnUbar) {
        return run_box_solver(medium, zero, f.f, medium.b,
                              KernelTerm::Mode::OnField, medium.kernel, grid,
                              domain, opts, BoundaryTrace::Kind::Integrated);
    }
    const MemoryKernel psi = psi_from_phi(medium.kernel);
    return run_box_solver(medium, zero, f.f, p, KernelTerm::Mode::OnDifference,
                          psi, grid, domain, opts, BoundaryTrace::Kind::Integrated);
}

BoundaryTrace integrate_trace(const BoundaryTrace& raw) {
    if (raw.kind != BoundaryTrace::Kind::Raw)
        throw std::invalid_argument("integrate_trace: trace kind must be raw");
    BoundaryTrace out = raw;
    out.kind = BoundaryTrace::Kind::Integrated;
    for (int k = 0; k < raw.n_boundary; ++k) out.at(0, k) = 0.0;
    for (int n = 1; n < raw.n_time; ++n)
        for (int k = 0; k < raw.n_boundary; ++k)
            out.at(n, k) = out.at(n - 1, k) +
                           0.5 * raw.dt * (raw.at(n - 1, k) + raw.at(n, k));
    return out;
}

double BoundaryTrace::l2_norm() const {
    double s = 0.0;
    for (int n = 0; n < n_time; ++n) {
        double row = 0.0;
        for (int k = 0; k < n_boundary; ++k) row += at(n, k) * at(n, k);
        s += trapezoid_weight(n, n_time - 1) * row;
    }
    return std::sqrt(s * dt);
}

double BoundaryTrace::rel_l2_diff(const BoundaryTrace& other) const {
    if (n_time != other.n_time || n_boundary != other.n_boundary)
        throw std::invalid_argument("BoundaryTrace: shape mismatch");
    double num = 0.0, den = 0.0;
    for (int n = 0; n < n_time; ++n) {
        const double w = trapezoid_weight(n, n_time - 1);
        for (int k = 0; k < n_boundary; ++k) {
            const double d = at(n, k) - other.at(n, k);
            num += w * d * d;
            den += w * at(n, k) * at(n, k);
        }
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

double field_energy(const Field& u, const Field& ut, const Field& c,
                    const Field& pot, const Mask* mask, const Grid& grid) {
    const int nx = grid.nx, ny = grid.ny;
    const double h = grid.h;
    double s = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = u.idx(i, j);
            if (mask && !(*mask)[k]) continue;
            double gx, gy;
            if (i == 0) gx = (u.v[k + 1] - u.v[k]) / h;
            else if (i == nx - 1) gx = (u.v[k] - u.v[k - 1]) / h;
            else gx = (u.v[k + 1] - u.v[k - 1]) / (2.0 * h);
            if (j == 0) gy = (u.v[k + nx] - u.v[k]) / h;
            else if (j == ny - 1) gy = (u.v[k] - u.v[k - nx]) / h;
            else gy = (u.v[k + nx] - u.v[k - nx]) / (2.0 * h);
            const double ic2 = 1.0 / (c.v[k] * c.v[k]);
            s += gx * gx + gy * gy +
                 ic2 * (pot.v[k] * u.v[k] * u.v[k] + ut.v[k] * ut.v[k]);
        }
    }
    return s * h * h;
}

double trace_h1_norm(const BoundaryTrace& trace) {
    const int nt = trace.n_time - 1;
    const int nb = trace.n_boundary;
    if (nt < 2) throw std::invalid_argument("trace_h1_norm: need nt >= 2");
    const double dS = 2.0 * std::numbers::pi * trace.radius / nb;
    double s = 0.0;
    for (int n = 0; n <= nt; ++n) {
        const double w = trapezoid_weight(n, nt);
        for (int k = 0; k < nb; ++k) {
            const double v = trace.at(n, k);
            double vt;
            if (n == 0)
                vt = (-3.0 * trace.at(0, k) + 4.0 * trace.at(1, k) - trace.at(2, k)) /
                     (2.0 * trace.dt);
            else if (n == nt)
                vt = (3.0 * trace.at(nt, k) - 4.0 * trace.at(nt - 1, k) +
                      trace.at(nt - 2, k)) /
                     (2.0 * trace.dt);
            else
                vt = (trace.at(n + 1, k) - trace.at(n - 1, k)) / (2.0 * trace.dt);
            const double vth =
                (trace.at(n, (k + 1) % nb) - trace.at(n, (k + nb - 1) % nb)) /
                (2.0 * dS);
            s += w * (v * v + vt * vt + vth * vth);
        }
    }
    return std::sqrt(s * trace.dt * dS);
}

double weighted_l2_norm(const Field& f, const Field& c, const Mask& mask,
                        double h) {
    double s = 0.0;
    for (std::size_t k = 0; k < f.v.size(); ++k)
        if (mask[k]) s += f.v[k] * f.v[k] / (c.v[k] * c.v[k]);
    return std::sqrt(s * h * h);
}

} // namespace mtat
