#pragma once

#include <cmath>
#include <vector>

#include "mtat/medium.hpp"

namespace mtat::detail {

/// Memory-term state machine shared by the box and disk steppers.  Produces
/// the per-node kernel term at the current time level; exponential kernels
/// use the O(1) recursion, tabulated kernels the direct trapezoid/midpoint
/// sum over history stored at the kernel's support nodes.
class KernelTerm {
public:
    enum class Mode { None, OnField, OnDifference };

    void init(Mode mode, const MemoryKernel& kernel, std::size_t n_nodes,
              int nt, double dt) {
        mode_ = mode;
        term_.assign(n_nodes, 0.0);
        active_ = mode != Mode::None && !kernel.is_zero();
        if (!active_) return;
        amp_ = kernel.amplitude.v;
        dt_ = dt;
        exponential_ = kernel.family == MemoryKernel::Family::Exponential;
        if (exponential_) {
            alpha_ = kernel.alpha_decay;
            state_.assign(n_nodes, 0.0);
        } else {
            g_ = kernel.time_factor(nt, dt);
            if (mode == Mode::OnDifference) {
                ghalf_.resize(nt);
                for (int m = 0; m < nt; ++m) ghalf_[m] = 0.5 * (g_[m] + g_[m + 1]);
            }
            for (std::size_t i = 0; i < amp_.size(); ++i)
                if (amp_[i] != 0.0) nodes_.push_back(static_cast<int>(i));
            history_.reserve(nt + 1);
        }
    }

    bool active() const { return active_; }

    /// Record the level-0 samples.  Only the tabulated on-field path stores
    /// them; the exponential state legitimately starts at zero.
    void push_initial(const std::vector<double>& u0) {
        if (!active_ || exponential_ || mode_ != Mode::OnField) return;
        history_.push_back(gather(u0));
    }

    /// Advance the state from level n-1 to level n given both levels.
    void push(const std::vector<double>& u_old,
              const std::vector<double>& u_new) {
        if (!active_) return;
        if (exponential_) {
            const double e = std::exp(-alpha_ * dt_);
            if (mode_ == Mode::OnField) {
                const double w0 = 0.5 * dt_ * e, w1 = 0.5 * dt_;
                for (std::size_t i = 0; i < state_.size(); ++i)
                    state_[i] = e * state_[i] + w0 * u_old[i] + w1 * u_new[i];
            } else {
                const double em = std::exp(-0.5 * alpha_ * dt_);
                for (std::size_t i = 0; i < state_.size(); ++i)
                    state_[i] = e * state_[i] + em * (u_new[i] - u_old[i]);
            }
            return;
        }
        if (mode_ == Mode::OnField) {
            history_.push_back(gather(u_new));
        } else {
            std::vector<double> row(nodes_.size());
            for (std::size_t s = 0; s < nodes_.size(); ++s)
                row[s] = u_new[nodes_[s]] - u_old[nodes_[s]];
            history_.push_back(std::move(row));
        }
    }

    /// Fill the term for the latest pushed level and return it.
    const std::vector<double>& refresh() {
        if (!active_) return term_;
        if (exponential_) {
            for (std::size_t i = 0; i < state_.size(); ++i)
                term_[i] = amp_[i] * state_[i];
            return term_;
        }
        if (mode_ == Mode::OnField) {
            // trapezoid: dt [ g_n u^0/2 + sum_{0<j<n} g_{n-j} u^j + g_0 u^n/2 ]
            const int n = static_cast<int>(history_.size()) - 1;
            for (std::size_t s = 0; s < nodes_.size(); ++s) {
                double acc = 0.0;
                if (n >= 1) {
                    acc = 0.5 * (g_[n] * history_[0][s] + g_[0] * history_[n][s]);
                    for (int j = 1; j < n; ++j) acc += g_[n - j] * history_[j][s];
                }
                term_[nodes_[s]] = amp_[nodes_[s]] * dt_ * acc;
            }
        } else {
            // midpoint per panel: sum_j g((n-j+1/2) dt) (u^j - u^{j-1})
            const int n = static_cast<int>(history_.size());
            for (std::size_t s = 0; s < nodes_.size(); ++s) {
                double acc = 0.0;
                for (int j = 1; j <= n; ++j) acc += ghalf_[n - j] * history_[j - 1][s];
                term_[nodes_[s]] = amp_[nodes_[s]] * acc;
            }
        }
        return term_;
    }

    const std::vector<double>& term() const { return term_; }

private:
    std::vector<double> gather(const std::vector<double>& u) const {
        std::vector<double> row(nodes_.size());
        for (std::size_t s = 0; s < nodes_.size(); ++s) row[s] = u[nodes_[s]];
        return row;
    }

    Mode mode_{Mode::None};
    bool active_{false};
    bool exponential_{true};
    double alpha_{0.0};
    double dt_{0.0};
    std::vector<double> amp_;
    std::vector<double> state_;
    std::vector<double> term_;
    std::vector<double> g_, ghalf_;
    std::vector<int> nodes_;
    std::vector<std::vector<double>> history_;
};

} // namespace mtat::detail
