#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtat/forward.hpp"
#include "mtat/geometry.hpp"
#include "mtat/medium.hpp"
#include "mtat/types.hpp"

namespace mtat {

/// One coefficient entry of the medium block: a constant, an isotropic
/// gaussian base + amp * exp(-r^2/width^2), or a field file on the run grid.
struct CoeffForm {
    enum class Type { Const, Gaussian, File };
    Type type{Type::Const};
    double value{0.0};
    double base{1.0}, amp{0.0}, cx{0.0}, cy{0.0}, width{1.0};
    std::string path;

    double eval(double x, double y) const;
    double analytic_max() const; // upper bound for Const/Gaussian forms

    static CoeffForm constant(double v) {
        CoeffForm f;
        f.type = Type::Const;
        f.value = v;
        return f;
    }
};

struct GeometryConfig {
    double box_halfwidth{0.0};
    int nx{0};
    double disk_radius{0.0};
    Vec2 disk_center{0.0, 0.0};
    int n_boundary{256};
    double margin_factor{1.1};
};

struct MediumConfig {
    CoeffForm c = CoeffForm::constant(1.0);
    CoeffForm a = CoeffForm::constant(0.0);
    CoeffForm b = CoeffForm::constant(0.0);
    CoeffForm q = CoeffForm::constant(0.0);
    double alpha_decay{1.0};
    std::string kernel_family{"exponential"}; // or "tabulated"
    std::string table_expr;                   // "exp <rate>" | "cos <omega>" | "file <path>"
    double table_T{0.0};                      // 0: defaults to run T
    double table_dt{0.0};                     // 0: defaults to table_T/2048
    Vec2 x0{0.0, 0.0};
    bool x0_set{false};
};

struct PhantomConfig {
    std::string kind{"gaussian_bumps"}; // | smoothed_disks | annulus | file
    std::vector<PhantomFeature> features{{0.0, 0.0, 0.15, 0.0, 1.0}};
    std::string path;
};

struct RunBlock {
    double T{0.0};
    double cfl_safety{0.5};
    int snapshot_stride{0};
    std::uint64_t seed{0};
    std::string wall{"hard"}; // | absorbing
};

struct ReconstructConfig {
    int m_max{30};
    double tol_rel{1e-4};
};

struct RunConfig {
    GeometryConfig geometry;
    MediumConfig medium;
    PhantomConfig phantom;
    RunBlock run;
    ReconstructConfig reconstruct;
    std::uint64_t config_hash{0};
};

/// Parse and validate a [section] key=value config file.  Unknown sections or
/// keys are hard errors; parse errors carry the line number.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical text form; load(dump(cfg)) reproduces cfg and its hash.
std::string dump_config(const RunConfig& cfg);

/// Everything a pipeline stage needs, assembled and cross-validated.
struct Assembled {
    RunConfig cfg;
    Grid grid;
    DomainDisk domain;
    Medium medium;
    Phantom phantom;
};

Assembled assemble(const RunConfig& cfg);

// Binary field format: "MTAT", u32 version=1, u32 nx, u32 ny, u64 config
// hash, f64 little-endian row-major payload, trailing CRC32 of all preceding
// bytes.
void write_field(const std::string& path, const Field& f,
                 std::uint64_t cfg_hash = 0);
Field read_field(const std::string& path, std::uint64_t* cfg_hash = nullptr);

// Trace format: "MTRC", u32 version=1, u32 n_time, u32 n_boundary, f64 dt,
// f64 disk radius, u32 kind, u64 config hash, payload (time-major), CRC32.
void write_trace(const std::string& path, const BoundaryTrace& t,
                 std::uint64_t cfg_hash = 0);
BoundaryTrace read_trace(const std::string& path,
                         std::uint64_t* cfg_hash = nullptr);

enum class PgmScaling { Symmetric, MinMax };

/// 16-bit binary PGM preview; symmetric scaling maps 0 to mid-gray.
void export_pgm(const Field& f, const std::string& path,
                PgmScaling scaling = PgmScaling::Symmetric,
                std::uint64_t cfg_hash = 0);

void write_energy_csv(const std::string& path, const EnergyTrace& et,
                      std::uint64_t cfg_hash = 0);

std::uint64_t fnv1a64(const std::string& text);

} // namespace mtat
