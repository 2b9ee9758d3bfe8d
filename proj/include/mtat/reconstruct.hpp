#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtat/forward.hpp"
#include "mtat/geometry.hpp"
#include "mtat/medium.hpp"

namespace mtat {

/// Discrete harmonic extension of circle boundary data into the disk.
struct HarmonicExtension {
    Field phi;        // extension; zero outside the interior mask
    double residual{0.0}; // final relative CG residual
    int iterations{0};
};

/// Node bookkeeping for the embedded-disk solves: nodes deeper than h are
/// unknowns, nodes within (0, h] of the circle form the Dirichlet band where
/// boundary data is injected, interpolated linearly in angle.
struct DiskIndex {
    std::vector<int> solve_nodes;
    std::vector<int> band_nodes;
    std::vector<int> band_k0;     // lower boundary-sample index per band node
    std::vector<double> band_frac; // angular interpolation fraction
};

DiskIndex build_disk_index(const DomainDisk& domain, const Grid& grid);

/// Interpolate per-circle-point values onto the band nodes.
std::vector<double> band_values(const DiskIndex& index,
                                const std::vector<double>& circle_values);

/// Solve the 5-point Laplace equation on the solve nodes with Dirichlet data
/// injected at the band, by conjugate gradients to relative residual
/// tol_harm.  Constant data extends to the constant.
HarmonicExtension harmonic_extension(const std::vector<double>& circle_values,
                                     const Grid& grid, const DomainDisk& domain,
                                     double tol_harm = 1e-10);

struct TimeReversalResult {
    Field A_out;      // A hbar = v_t(0, .), zero outside the interior mask
    Field v_at_t0;    // v(t=0, .), needed by the energy-partition checks
    HarmonicExtension extension;
};

/// Solve the time-reversal system via the t -> T-t substitution, which turns
/// it into the integrated-system dynamics (+a damping, forward Psi
/// convolution on the time difference) on the disk with the reversed trace
/// injected as Dirichlet data; read off v_t at t = 0.
TimeReversalResult solve_time_reversal(const Medium& medium,
                                       const BoundaryTrace& hbar,
                                       const Grid& grid,
                                       const DomainDisk& domain,
                                       const SolveOptions& opts = {});

/// Error operator K f = f - A Lambda_bar_Psi f, one forward-and-back round
/// trip; the returned field lives on the interior mask.
Field apply_K(const Medium& medium, const Field& f, const Grid& grid,
              const DomainDisk& domain, const SolveOptions& opts = {});

struct ReconstructionReport {
    int iterations{0};
    std::vector<double> residual_norms; // ||g_m|| in L2(Omega; c^-2 dx)
    std::vector<double> ratios;         // ||g_{m+1}|| / ||g_m||
    bool converged{false};
    double final_rel_residual{0.0};
    double seconds_total{0.0};
};

struct NeumannResult {
    Field f_hat;
    ReconstructionReport report;
};

/// Neumann-series reconstruction f = sum_m K^m A hbar, stopped when the
/// iterate norm falls below tol_rel relative to the estimate or at m_max.
/// Three consecutive ratios above 1.05 abort with a diagnostic that compares
/// T against the geometric time thresholds.
NeumannResult neumann_reconstruct(const Medium& medium, const BoundaryTrace& hbar,
                                  const Grid& grid, const DomainDisk& domain,
                                  int m_max, double tol_rel,
                                  const SolveOptions& opts = {});

struct ContractionEstimate {
    double rho_max{0.0};
    std::vector<double> ratios;
};

/// Empirical operator-norm probe: max over seeded random smooth phantoms of
/// ||Kf|| / ||f|| in L2(Omega; c^-2 dx).
ContractionEstimate contraction_estimate(const Medium& medium, const Grid& grid,
                                         const DomainDisk& domain, double T,
                                         int n_samples, std::uint64_t seed,
                                         const SolveOptions& opts = {});

} // namespace mtat
