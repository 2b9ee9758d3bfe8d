#pragma once

#include <vector>

#include "mtat/types.hpp"

namespace mtat {

/// Uniform square computational box enclosing the observation disk.
///
/// Nodes sit at origin + (i*h, j*h), i in [0, nx), j in [0, ny).
/// The time axis carries nt steps of size dt with nt*dt == T exactly.
struct Grid {
    int nx{0};
    int ny{0};
    double h{0.0};
    Vec2 origin;
    double dt{0.0};
    int nt{0};

    double x(int i) const { return origin.x + i * h; }
    double y(int j) const { return origin.y + j * h; }
    double T() const { return nt * dt; }
    double half_width() const { return 0.5 * h * (nx - 1); }
};

/// Circular observation domain with equispaced boundary samples and the
/// per-node strict-interior mask.
struct DomainDisk {
    Vec2 center;
    double radius{0.0};
    int n_boundary{0};
    std::vector<Vec2> boundary_points;
    Mask interior_mask;
};

/// Geometric time bounds: the uniqueness time D_Omega/c0 and the stability
/// half-bound D_Omega/(alpha_conv*c0) computed from the convexity margin
/// alpha_conv = min over the closed disk of (1 - c^-1 (x-x0).grad c).
struct TimeBounds {
    double R_Omega{0.0};
    double r_Omega{0.0};
    double D_Omega{0.0};
    double alpha_conv{0.0};
    double c0{0.0};
    double T1_halfbound{0.0};
    double T_uniqueness{0.0};
    bool speed_condition_ok{false};
};

/// Bilinear sampling of grid fields at the disk boundary points.
struct BoundarySampling {
    struct Point {
        int i0{0}; // lower-left node of the enclosing cell
        int j0{0};
        double w00{0.0}, w10{0.0}, w01{0.0}, w11{0.0};
    };
    std::vector<Point> points;
    double arc_weight{0.0}; // 2*pi*R / n_boundary

    double sample(const Field& f, std::size_t k) const {
        const Point& p = points[k];
        return p.w00 * f.at(p.i0, p.j0) + p.w10 * f.at(p.i0 + 1, p.j0) +
               p.w01 * f.at(p.i0, p.j0 + 1) + p.w11 * f.at(p.i0 + 1, p.j0 + 1);
    }
};

/// Square grid over [-box_halfwidth, box_halfwidth]^2 with dt snapped down so
/// that nt*dt == T and the CFL bound dt <= cfl_safety*h/(c_max*sqrt(2)) holds.
Grid build_grid(double box_halfwidth, int nx, double T, double c_max,
                double cfl_safety, long step_cap = 2000000);

/// Same box geometry with spacing and step inherited from an existing grid;
/// used for margin studies where node alignment must be exact.
Grid extend_grid(const Grid& base, int extra_nodes_per_side);

DomainDisk make_domain(Vec2 center, double radius, int n_boundary,
                       const Grid& grid);

/// Enforce the free-space emulation margin: the gap between the disk and the
/// box walls must be at least margin_factor * c_max * T / 2.
void validate_margin(const DomainDisk& domain, const Grid& grid, double c_max,
                     double T, double margin_factor);

BoundarySampling boundary_sampling(const DomainDisk& domain, const Grid& grid);

TimeBounds uniqueness_times(const Field& c, Vec2 x0, const DomainDisk& domain,
                            const Grid& grid);

/// Nodes of the closed disk (dist <= radius), used by coefficient checks.
Mask closed_disk_mask(const DomainDisk& domain, const Grid& grid);

} // namespace mtat
