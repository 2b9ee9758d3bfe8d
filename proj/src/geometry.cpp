#include "mtat/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mtat {

Grid build_grid(double box_halfwidth, int nx, double T, double c_max,
                double cfl_safety, long step_cap) {
    if (box_halfwidth <= 0.0) throw std::invalid_argument("build_grid: box_halfwidth must be > 0");
    if (nx < 16) throw std::invalid_argument("build_grid: nx must be >= 16, got " + std::to_string(nx));
    if (T <= 0.0) throw std::invalid_argument("build_grid: T must be > 0");
    if (c_max <= 0.0) throw std::invalid_argument("build_grid: c_max must be > 0");
    if (cfl_safety <= 0.0 || cfl_safety > 1.0)
        throw std::invalid_argument("build_grid: cfl_safety must be in (0,1]");

    Grid g;
    g.nx = nx;
    g.ny = nx;
    g.h = 2.0 * box_halfwidth / (nx - 1);
    g.origin = {-box_halfwidth, -box_halfwidth};

    const double dt_cfl = cfl_safety * g.h / (c_max * std::numbers::sqrt2);
    const long nt = static_cast<long>(std::ceil(T / dt_cfl - 1e-12));
    if (nt > step_cap)
        throw std::invalid_argument("build_grid: nt=" + std::to_string(nt) +
                                    " exceeds step cap " + std::to_string(step_cap));
    g.nt = static_cast<int>(nt);
    g.dt = T / g.nt; // snapped down: nt*dt == T exactly, dt <= dt_cfl
    return g;
}

Grid extend_grid(const Grid& base, int extra_nodes_per_side) {
    if (extra_nodes_per_side < 0)
        throw std::invalid_argument("extend_grid: negative extension");
    Grid g = base;
    g.nx = base.nx + 2 * extra_nodes_per_side;
    g.ny = base.ny + 2 * extra_nodes_per_side;
    g.origin = {base.origin.x - extra_nodes_per_side * base.h,
                base.origin.y - extra_nodes_per_side * base.h};
    return g;
}

DomainDisk make_domain(Vec2 center, double radius, int n_boundary,
                       const Grid& grid) {
    if (radius <= 0.0) throw std::invalid_argument("make_domain: radius must be > 0");
    if (n_boundary < 8) throw std::invalid_argument("make_domain: n_boundary must be >= 8");

    const double xmin = grid.x(0), xmax = grid.x(grid.nx - 1);
    const double ymin = grid.y(0), ymax = grid.y(grid.ny - 1);
    if (center.x - radius <= xmin || center.x + radius >= xmax ||
        center.y - radius <= ymin || center.y + radius >= ymax)
        throw std::invalid_argument("make_domain: disk not strictly inside the box");

    DomainDisk d;
    d.center = center;
    d.radius = radius;
    d.n_boundary = n_boundary;
    d.boundary_points.resize(n_boundary);
    for (int k = 0; k < n_boundary; ++k) {
        const double th = 2.0 * std::numbers::pi * k / n_boundary;
        d.boundary_points[k] = {center.x + radius * std::cos(th),
                                center.y + radius * std::sin(th)};
    }
    d.interior_mask.assign(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
    const double r2 = radius * radius;
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double dx = grid.x(i) - center.x;
            const double dy = grid.y(j) - center.y;
            if (dx * dx + dy * dy < r2)
                d.interior_mask[static_cast<std::size_t>(j) * grid.nx + i] = 1;
        }
    }
    return d;
}

void validate_margin(const DomainDisk& domain, const Grid& grid, double c_max,
                     double T, double margin_factor) {
    const double need = margin_factor * c_max * T / 2.0;
    const double xmin = grid.x(0), xmax = grid.x(grid.nx - 1);
    const double ymin = grid.y(0), ymax = grid.y(grid.ny - 1);
    const double gap = std::min(
        std::min(domain.center.x - domain.radius - xmin, xmax - domain.center.x - domain.radius),
        std::min(domain.center.y - domain.radius - ymin, ymax - domain.center.y - domain.radius));
    if (gap + 1e-12 < need)
        throw std::invalid_argument(
            "box margin " + std::to_string(gap) + " below required " +
            std::to_string(need) + " (= margin_factor*c_max*T/2); enlarge the box");
}

BoundarySampling boundary_sampling(const DomainDisk& domain, const Grid& grid) {
    BoundarySampling s;
    s.arc_weight = 2.0 * std::numbers::pi * domain.radius / domain.n_boundary;
    s.points.resize(domain.boundary_points.size());
    for (std::size_t k = 0; k < domain.boundary_points.size(); ++k) {
        const Vec2 p = domain.boundary_points[k];
        const double gx = (p.x - grid.origin.x) / grid.h;
        const double gy = (p.y - grid.origin.y) / grid.h;
        int i0 = static_cast<int>(std::floor(gx));
        int j0 = static_cast<int>(std::floor(gy));
        if (i0 < 0 || j0 < 0 || i0 + 1 >= grid.nx || j0 + 1 >= grid.ny)
            throw std::invalid_argument("boundary_sampling: circle point outside grid");
        const double fx = gx - i0;
        const double fy = gy - j0;
        BoundarySampling::Point q;
        q.i0 = i0;
        q.j0 = j0;
        q.w00 = (1.0 - fx) * (1.0 - fy);
        q.w10 = fx * (1.0 - fy);
        q.w01 = (1.0 - fx) * fy;
        q.w11 = fx * fy;
        s.points[k] = q;
    }
    return s;
}

Mask closed_disk_mask(const DomainDisk& domain, const Grid& grid) {
    Mask m(static_cast<std::size_t>(grid.nx) * grid.ny, 0);
    const double r2 = domain.radius * domain.radius * (1.0 + 1e-12);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            const double dx = grid.x(i) - domain.center.x;
            const double dy = grid.y(j) - domain.center.y;
            if (dx * dx + dy * dy <= r2)
                m[static_cast<std::size_t>(j) * grid.nx + i] = 1;
        }
    }
    return m;
}

TimeBounds uniqueness_times(const Field& c, Vec2 x0, const DomainDisk& domain,
                            const Grid& grid) {
    if (c.nx != grid.nx || c.ny != grid.ny)
        throw std::invalid_argument("uniqueness_times: field/grid shape mismatch");
    double cmin = c.v[0], cmax = c.v[0];
    for (double v : c.v) {
        if (v <= 0.0) throw std::invalid_argument("uniqueness_times: c must be positive");
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
    }

    TimeBounds tb;
    const double d = dist(x0, domain.center);
    tb.R_Omega = d + domain.radius;
    tb.r_Omega = (d > domain.radius) ? d - domain.radius : 0.0;
    tb.D_Omega = tb.R_Omega - tb.r_Omega;
    tb.c0 = std::min(cmin, 1.0 / cmax);

    // alpha = min over the closed disk of 1 - c^-1 (x-x0).grad c, centered
    // differences.  The disk sits strictly inside the box so neighbors exist.
    const Mask disk = closed_disk_mask(domain, grid);
    double alpha = std::numeric_limits<double>::infinity();
    for (int j = 1; j < grid.ny - 1; ++j) {
        for (int i = 1; i < grid.nx - 1; ++i) {
            if (!disk[c.idx(i, j)]) continue;
            const double cx = (c.at(i + 1, j) - c.at(i - 1, j)) / (2.0 * grid.h);
            const double cy = (c.at(i, j + 1) - c.at(i, j - 1)) / (2.0 * grid.h);
            const double dot = (grid.x(i) - x0.x) * cx + (grid.y(j) - x0.y) * cy;
            alpha = std::min(alpha, 1.0 - dot / c.at(i, j));
        }
    }
    tb.alpha_conv = alpha;
    tb.speed_condition_ok = alpha > 0.0;
    tb.T_uniqueness = tb.D_Omega / tb.c0;
    tb.T1_halfbound = tb.speed_condition_ok
                          ? tb.D_Omega / (alpha * tb.c0)
                          : std::numeric_limits<double>::infinity();
    return tb;
}

} // namespace mtat
