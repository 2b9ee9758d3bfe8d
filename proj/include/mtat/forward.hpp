#pragma once

#include <optional>
#include <vector>

#include "mtat/geometry.hpp"
#include "mtat/medium.hpp"
#include "mtat/types.hpp"

namespace mtat {

/// Dirichlet trace of a wave field on [0,T] x dOmega, sampled at the disk's
/// equispaced boundary points every time step.
struct BoundaryTrace {
    enum class Kind { Raw, Integrated };

    Kind kind{Kind::Raw};
    int n_time{0}; // nt + 1 samples
    int n_boundary{0};
    double dt{0.0};
    double radius{0.0};
    std::vector<double> values; // time-major: values[n*n_boundary + k]

    double& at(int n, int k) { return values[static_cast<std::size_t>(n) * n_boundary + k]; }
    double at(int n, int k) const { return values[static_cast<std::size_t>(n) * n_boundary + k]; }

    double rel_l2_diff(const BoundaryTrace& other) const;
    double l2_norm() const;
};

/// Per-step energies over the box / disk / complement, the cumulative
/// dissipation integrals and the extended energy.
///
/// diss_memory is the multiplier-exact accounting 2 int c^-2 (kernel term) u_t
/// which makes `extended` a conserved quantity up to discretization error;
/// diss_memory_pd is the positive-definite pairing 2 int c^-2 (Phi*u_t) u_t,
/// nonnegative for Condition-1 kernels.  For the integrated system the kernel
/// already acts on the time derivative and the two coincide.
struct EnergyTrace {
    std::vector<double> t;
    std::vector<double> E_box, E_omega, E_omega_c;
    std::vector<double> diss_damping, diss_memory, diss_memory_pd;
    std::vector<double> extended;
};

struct SolveOptions {
    enum class Wall { Hard, Absorbing };
    Wall wall{Wall::Hard};
    int threads{1};
    int snapshot_stride{0};
    bool compute_energies{true};
};

struct ForwardResult {
    BoundaryTrace trace;
    EnergyTrace energy;
    Field u_final;  // field at t = T
    Field ut_final; // time derivative at t = T (one-sided, second order)
    std::vector<Field> snapshots;
    std::vector<double> snapshot_times;
};

/// Leapfrog solve of the attenuated Cauchy problem
///   c^-2 u_tt = Lap u - c^-2 (a u_t + b u + Phi*u),
///   u(0) = f, u_t(0) = -a f,
/// on the full box with hard or absorbing walls; emits the raw trace.
ForwardResult solve_forward(const Medium& medium, const Phantom& f,
                            const Grid& grid, const DomainDisk& domain,
                            const SolveOptions& opts = {});

/// Which realization of the integrated system's kernel term to step.  Both
/// are O(dt^2)-consistent; PsiOnDu keeps the accumulator on the backward
/// time-difference of u_bar, PhiOnUbar uses the algebraically equivalent
/// b + Phi*u_bar form.
enum class IntegratedKernelForm { PsiOnDu, PhiOnUbar };

/// Same scheme for the integrated system
///   u_tt + a u_t - c^2 Lap u + p u + Psi*u_t = 0, u(0) = 0, u_t(0) = f,
/// with p = b - Psi(0,.); emits the integrated trace.
ForwardResult solve_integrated_forward(
    const Medium& medium, const Phantom& f, const Grid& grid,
    const DomainDisk& domain, const SolveOptions& opts = {},
    IntegratedKernelForm form = IntegratedKernelForm::PsiOnDu);

/// Cumulative trapezoid time integral of a raw trace.
BoundaryTrace integrate_trace(const BoundaryTrace& raw);

/// Energy of a field pair over the masked region:
///   sum h^2 [ |grad u|^2 + pot c^-2 u^2 + c^-2 u_t^2 ].
/// The zeroth-order term carries the c^-2 weight of the 2 c^-2 u_t multiplier
/// identity so that the discrete energy accounting closes.
double field_energy(const Field& u, const Field& ut, const Field& c,
                    const Field& pot, const Mask* mask, const Grid& grid);

/// Discrete H^1((0,T) x dOmega) norm of a trace: centered differences in time
/// and (periodic) arclength.
double trace_h1_norm(const BoundaryTrace& trace);

/// Weighted L2(Omega; c^-2 dx) norm over the interior mask.
double weighted_l2_norm(const Field& f, const Field& c, const Mask& mask,
                        double h);

} // namespace mtat
