#include "mtat/memory_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace mtat {

double series_inner(std::span<const double> a, std::span<const double> b,
                    double dt) {
    if (a.size() != b.size())
        throw std::invalid_argument("series_inner: length mismatch");
    const int nt = static_cast<int>(a.size()) - 1;
    double s = 0.0;
    for (int n = 0; n <= nt; ++n) s += trapezoid_weight(n, nt) * a[n] * b[n];
    return s * dt;
}

std::vector<double> convolve_forward(std::span<const double> phi,
                                     std::span<const double> u, double dt) {
    if (phi.size() != u.size())
        throw std::invalid_argument("convolve_forward: length mismatch");
    const int nt = static_cast<int>(u.size()) - 1;
    std::vector<double> out(u.size(), 0.0);
    for (int n = 1; n <= nt; ++n) {
        double s = 0.5 * (phi[n] * u[0] + phi[0] * u[n]);
        for (int j = 1; j < n; ++j) s += phi[n - j] * u[j];
        out[n] = dt * s;
    }
    return out;
}

std::vector<double> convolve_adjoint(std::span<const double> phi,
                                     std::span<const double> v, double dt) {
    if (phi.size() != v.size())
        throw std::invalid_argument("convolve_adjoint: length mismatch");
    const int nt = static_cast<int>(v.size()) - 1;
    std::vector<double> out(v.size(), 0.0);
    if (nt < 1) return out;
    // Exact transpose of convolve_forward under the trapezoid inner product:
    // A = W^-1 F^T W with W = diag(trapezoid weights).
    for (int j = 0; j <= nt; ++j) {
        double s = 0.0;
        for (int n = std::max(j, 1); n <= nt; ++n) {
            const double w_fwd = (j == 0 || j == n) ? 0.5 : 1.0;
            s += w_fwd * trapezoid_weight(n, nt) * phi[n - j] * v[n];
        }
        out[j] = dt * s / trapezoid_weight(j, nt);
    }
    return out;
}

double quadratic_form(std::span<const double> phi, std::span<const double> y,
                      double dt) {
    const std::vector<double> conv = convolve_forward(phi, y, dt);
    return series_inner(conv, y, dt);
}

TailFit fit_exponential_tail(std::span<const double> phi, double dt) {
    const int n = static_cast<int>(phi.size());
    if (n < 4) throw std::invalid_argument("fit_exponential_tail: table too short");
    const int begin = std::max(0, n - std::max(4, n / 10));
    // Least squares on log|phi| over the fit window.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = begin; i < n; ++i) {
        if (phi[i] == 0.0)
            throw std::invalid_argument("fit_exponential_tail: zero sample in fit window");
        const double t = i * dt;
        const double l = std::log(std::abs(phi[i]));
        sx += t; sy += l; sxx += t * t; sxy += t * l;
        ++m;
    }
    const double denom = m * sxx - sx * sx;
    if (denom <= 0.0) throw std::invalid_argument("fit_exponential_tail: degenerate fit window");
    TailFit fit;
    fit.slope = (m * sxy - sx * sy) / denom;
    if (fit.slope >= 0.0)
        throw std::invalid_argument("fit_exponential_tail: non-decaying tail (fit slope >= 0)");
    // phi(t) ~ phi_end * exp(slope (t - T)) beyond the table end.
    const double phi_end = phi[n - 1];
    fit.tail_integral = -phi_end / fit.slope;
    return fit;
}

std::vector<double> psi_from_phi_table(std::span<const double> phi, double dt) {
    const int n = static_cast<int>(phi.size());
    std::vector<double> psi(phi.size(), 0.0);
    bool all_zero = true;
    for (double p : phi)
        if (p != 0.0) { all_zero = false; break; }
    if (all_zero) return psi;

    const TailFit fit = fit_exponential_tail(phi, dt);
    // Psi_j = -( tail + int_{t_j}^{T} phi ), accumulated right to left.
    double acc = fit.tail_integral;
    psi[n - 1] = -acc;
    for (int j = n - 2; j >= 0; --j) {
        acc += 0.5 * dt * (phi[j] + phi[j + 1]);
        psi[j] = -acc;
    }
    return psi;
}

} // namespace mtat
