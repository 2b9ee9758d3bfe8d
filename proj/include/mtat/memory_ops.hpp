#pragma once

#include <span>
#include <vector>

#include "mtat/types.hpp"

namespace mtat {

/// Trapezoid weight of sample n on a series of nt+1 samples (1/2 at the ends).
inline double trapezoid_weight(int n, int nt) {
    return (n == 0 || n == nt) ? 0.5 : 1.0;
}

/// Weighted L2(0,T) inner product of two sampled series (trapezoid rule).
double series_inner(std::span<const double> a, std::span<const double> b, double dt);

/// Causal convolution (Phi*u)_n = dt * sum_{j<=n} w_{n,j} Phi_{n-j} u_j with
/// trapezoid weights; the n = 0 sample is 0 (zero-length integral).
std::vector<double> convolve_forward(std::span<const double> phi,
                                     std::span<const double> u, double dt);

/// Anticausal adjoint convolution, built as the exact discrete transpose of
/// convolve_forward under the trapezoid inner product.  It matches the
/// trapezoid rule for int_s^T Phi(t-s)v(t)dt at interior samples; the two
/// endpoint samples carry the transpose's corner weights instead.
std::vector<double> convolve_adjoint(std::span<const double> phi,
                                     std::span<const double> v, double dt);

/// Trapezoid estimate of int_0^T (Phi*y) y dt, the positive-definiteness
/// quadratic form of the kernel.
double quadratic_form(std::span<const double> phi, std::span<const double> y,
                      double dt);

/// O(1)-memory recursion for the exponential kernel: m tracks
/// int_0^t exp(-alpha (t-s)) u(s) ds per node, advanced by one trapezoid
/// panel per step.  Phi*u at a node is then q * m.
class ExpAccumulator {
public:
    ExpAccumulator() = default;
    ExpAccumulator(std::size_t n, double alpha) : alpha_(alpha), m_(n, 0.0) {}

    void step(std::span<const double> u_old, std::span<const double> u_new,
              double dt) {
        const double e = std::exp(-alpha_ * dt);
        const double w_old = 0.5 * dt * e;
        const double w_new = 0.5 * dt;
        for (std::size_t i = 0; i < m_.size(); ++i)
            m_[i] = e * m_[i] + w_old * u_old[i] + w_new * u_new[i];
    }

    /// Midpoint-weighted increment step used for kernels acting on the
    /// backward time-difference of a field; du holds u_new - u_old.
    void step_difference(std::span<const double> du, double dt) {
        const double e = std::exp(-alpha_ * dt);
        const double em = std::exp(-0.5 * alpha_ * dt);
        for (std::size_t i = 0; i < m_.size(); ++i)
            m_[i] = e * m_[i] + em * du[i];
    }

    std::span<const double> values() const { return m_; }
    double alpha() const { return alpha_; }
    void reset() { std::fill(m_.begin(), m_.end(), 0.0); }

private:
    double alpha_{0.0};
    std::vector<double> m_;
};

/// Scalar convenience wrapper over the same recursion.
inline double exp_memory_step(double m, double u_old, double u_new,
                              double alpha, double dt) {
    const double e = std::exp(-alpha * dt);
    return e * m + 0.5 * dt * (e * u_old + u_new);
}

struct TailFit {
    double slope{0.0};     // fitted d/dt log|phi|, must be negative
    double tail_integral{0.0}; // int_{T_table}^inf of the fitted extension
};

/// Exponential tail fit of log|phi| over the last tenth of the samples.
/// Throws if the fit slope is nonnegative (non-decaying tail).
TailFit fit_exponential_tail(std::span<const double> phi, double dt);

/// Psi(t) = -int_t^inf phi(s) ds for a sampled kernel time factor, using the
/// trapezoid rule inside the table and the exponential tail fit beyond it.
/// A identically-zero table yields an identically-zero result.
std::vector<double> psi_from_phi_table(std::span<const double> phi, double dt);

} // namespace mtat
