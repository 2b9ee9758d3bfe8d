#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtat/geometry.hpp"
#include "mtat/memory_ops.hpp"
#include "mtat/types.hpp"

namespace mtat {

/// Time-convolution attenuation kernel Phi(t,x) = amplitude(x) * g(t) with
/// g either exp(-alpha_decay t) or a sampled table.  Attenuation kernels have
/// nonnegative amplitude; derived kernels (Psi) may carry signed amplitudes.
struct MemoryKernel {
    enum class Family { Exponential, Tabulated };

    Family family{Family::Exponential};
    Field amplitude;          // q(x); zero outside the disk
    double alpha_decay{1.0};  // exponential rate
    std::vector<double> table; // sampled g(j*table_dt) for Family::Tabulated
    double table_dt{0.0};

    /// Time factor sampled at j*dt for j in [0, nt]; tabulated kernels are
    /// linearly interpolated and must cover [0, nt*dt].
    std::vector<double> time_factor(int nt, double dt) const;

    bool is_zero() const;
};

/// Coefficient fields of the attenuated wave operator with their support and
/// sign hypotheses enforced: a, b, q and c-1 vanish outside the disk and
/// c0 <= c <= 1/c0 with a, b, q >= 0.
struct Medium {
    Field c;
    Field a;
    Field b;
    MemoryKernel kernel;
    double c0{1.0};
    double c_max{1.0};

    /// p = b - Psi(0,.) = b + q/alpha for the exponential family; the zeroth
    /// order coefficient of the integrated and time-reversal systems.
    Field p_coefficient() const;
};

struct Phantom {
    Field f;
};

using ScalarFn = std::function<double(double, double)>;

/// Closed-form or tabulated coefficient inputs for make_medium.
struct CoefficientSpec {
    ScalarFn c = [](double, double) { return 1.0; };
    ScalarFn a = [](double, double) { return 0.0; };
    ScalarFn b = [](double, double) { return 0.0; };
    ScalarFn q = [](double, double) { return 0.0; };
    double alpha_decay{1.0};
    MemoryKernel::Family family{MemoryKernel::Family::Exponential};
    std::vector<double> table; // time factor for tabulated kernels
    double table_dt{0.0};
};

/// C2 cutoff in the inside-distance to the circle: 0 outside the disk, 1 at
/// depth >= 2h, quintic smoothstep in between.
double domain_cutoff(double inside_distance, double h);

/// Sample the coefficient fields, apply the support cutoff to a, b, q and
/// c-1, and validate the sign and bound hypotheses.
Medium make_medium(const CoefficientSpec& spec, const Grid& grid,
                   const DomainDisk& domain);

struct SpeedConditionReport {
    bool ok{false};
    double margin{0.0}; // min over the disk of c - (x-x0).grad c
};

SpeedConditionReport check_speed_condition(const Medium& medium, Vec2 x0,
                                           const Grid& grid,
                                           const DomainDisk& domain);

/// Report of the discrete Condition-1 checks on the kernel time factor plus
/// a Monte-Carlo positive-definiteness probe of the quadratic form.
struct AttenuationReport {
    bool value_sign_ok{false};
    bool first_difference_ok{false};
    bool second_difference_ok{false};
    bool quadratic_form_ok{false};
    double worst_value{0.0};
    double worst_first_difference{0.0};  // most positive first difference
    double worst_second_difference{0.0}; // most negative second difference
    double worst_quadratic_form{0.0};
    int probes{0};

    bool all_ok() const {
        return value_sign_ok && first_difference_ok && second_difference_ok &&
               quadratic_form_ok;
    }
};

AttenuationReport check_attenuation_condition(const MemoryKernel& kernel,
                                              double T, double dt,
                                              int n_probes = 100,
                                              std::uint64_t seed = 0);

/// Psi(t,x) = -int_t^inf Phi(s,x) ds.  Exponential kernels map to
/// -(q/alpha) exp(-alpha t); tabulated kernels use the numeric tail integral.
MemoryKernel psi_from_phi(const MemoryKernel& kernel);

enum class PhantomKind { GaussianBumps, SmoothedDisks, Annulus };

/// One feature of a phantom; meaning of the fields depends on the kind.
struct PhantomFeature {
    double cx{0.0};
    double cy{0.0};
    double r0{0.0};    // gaussian width | disk radius | annulus inner radius
    double r1{0.0};    // annulus outer radius
    double amplitude{1.0};
};

Phantom make_phantom(PhantomKind kind, const std::vector<PhantomFeature>& features,
                     const Grid& grid, const DomainDisk& domain);

/// Deterministic random smooth phantom (1..3 gaussian bumps) for operator
/// norm probes.
Phantom make_random_phantom(std::uint64_t seed, const Grid& grid,
                            const DomainDisk& domain);

} // namespace mtat
