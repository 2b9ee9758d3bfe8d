#pragma once

#include <cstddef>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mtat {

struct Vec2 {
    double x{0.0};
    double y{0.0};
};

inline double dist(const Vec2& a, const Vec2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Dense scalar field on a 2-D node grid, row-major with x contiguous.
struct Field {
    int nx{0};
    int ny{0};
    std::vector<double> v;

    Field() = default;
    Field(int nx_, int ny_, double fill = 0.0)
        : nx(nx_), ny(ny_), v(static_cast<std::size_t>(nx_) * ny_, fill) {}

    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * nx + i;
    }
    double& at(int i, int j) { return v[idx(i, j)]; }
    double at(int i, int j) const { return v[idx(i, j)]; }
    std::size_t size() const { return v.size(); }

    bool same_shape(const Field& o) const { return nx == o.nx && ny == o.ny; }
};

using Mask = std::vector<std::uint8_t>;

inline double max_abs(const Field& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

inline bool all_finite(const Field& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

} // namespace mtat
