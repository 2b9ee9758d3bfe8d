#include "mtat/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "mtat/io.hpp"
#include "mtat/reconstruct.hpp"

namespace mtat {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
    std::string config;
    std::string out{"out"};
    int threads{1};
    std::optional<std::uint64_t> seed;
    std::optional<int> snapshots;
};

SolveOptions solve_options(const CommonArgs& args, const RunConfig& cfg) {
    SolveOptions o;
    o.threads = args.threads;
    o.wall = cfg.run.wall == "absorbing" ? SolveOptions::Wall::Absorbing
                                         : SolveOptions::Wall::Hard;
    o.snapshot_stride = args.snapshots.value_or(cfg.run.snapshot_stride);
    return o;
}

RunConfig load_with_overrides(const CommonArgs& args) {
    RunConfig cfg = load_config(args.config);
    if (args.seed) {
        cfg.run.seed = *args.seed;
        cfg.config_hash = fnv1a64(dump_config(cfg));
    }
    return cfg;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_snapshots(const ForwardResult& res, const fs::path& dir,
                     std::uint64_t hash) {
    for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
        char name[64];
        std::snprintf(name, sizeof(name), "snap_%05zu.mtat", s);
        write_field((dir / name).string(), res.snapshots[s], hash);
    }
}

int cmd_forward(const CommonArgs& args, bool energy_only) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const SolveOptions opts = solve_options(args, cfg);
    const ForwardResult res = solve_forward(as.medium, as.phantom, as.grid,
                                            as.domain, opts);
    fs::create_directories(args.out);
    const fs::path dir(args.out);
    write_energy_csv((dir / "energy.csv").string(), res.energy, cfg.config_hash);
    if (energy_only) {
        std::cout << "energy-report: wrote " << (dir / "energy.csv").string() << "\n";
        return 0;
    }
    write_trace((dir / "trace_raw.mtrc").string(), res.trace, cfg.config_hash);
    write_trace((dir / "trace_integrated.mtrc").string(), integrate_trace(res.trace),
                cfg.config_hash);
    write_field((dir / "phantom.mtat").string(), as.phantom.f, cfg.config_hash);
    export_pgm(as.phantom.f, (dir / "phantom.pgm").string(), PgmScaling::Symmetric,
               cfg.config_hash);
    write_snapshots(res, dir, cfg.config_hash);
    std::cout << "forward: wrote trace_raw.mtrc, trace_integrated.mtrc, energy.csv in "
              << args.out << "\n";
    return 0;
}

json report_json(const RunConfig& cfg, const ReconstructionReport& rep) {
    json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    j["config"] = hash;
    j["iterations"] = rep.iterations;
    j["residual_norms"] = rep.residual_norms;
    j["ratios"] = rep.ratios;
    j["converged"] = rep.converged;
    j["final_rel_residual"] = rep.final_rel_residual;
    return j;
}

int cmd_reconstruct(const CommonArgs& args, const std::string& trace_path) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const SolveOptions opts = solve_options(args, cfg);
    fs::create_directories(args.out);
    const fs::path dir(args.out);

    const std::string tp =
        trace_path.empty() ? (dir / "trace_raw.mtrc").string() : trace_path;
    BoundaryTrace trace = read_trace(tp);
    if (trace.kind == BoundaryTrace::Kind::Raw) trace = integrate_trace(trace);

    const NeumannResult nr =
        neumann_reconstruct(as.medium, trace, as.grid, as.domain,
                            cfg.reconstruct.m_max, cfg.reconstruct.tol_rel, opts);
    write_field((dir / "f_hat.mtat").string(), nr.f_hat, cfg.config_hash);
    export_pgm(nr.f_hat, (dir / "f_hat.pgm").string(), PgmScaling::Symmetric,
               cfg.config_hash);
    write_json((dir / "report.json").string(), report_json(cfg, nr.report));
    std::cout << "reconstruct: " << nr.report.iterations << " iterations, "
              << (nr.report.converged ? "converged" : "stopped at m_max")
              << ", rel residual " << nr.report.final_rel_residual << " ("
              << nr.report.seconds_total << " s)\n";
    return 0;
}

int cmd_roundtrip(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const SolveOptions opts = solve_options(args, cfg);
    fs::create_directories(args.out);
    const fs::path dir(args.out);

    SolveOptions fwd_opts = opts;
    fwd_opts.compute_energies = false;
    const ForwardResult fwd = solve_forward(as.medium, as.phantom, as.grid,
                                            as.domain, fwd_opts);
    write_trace((dir / "trace_raw.mtrc").string(), fwd.trace, cfg.config_hash);
    const BoundaryTrace hbar = integrate_trace(fwd.trace);
    const NeumannResult nr =
        neumann_reconstruct(as.medium, hbar, as.grid, as.domain,
                            cfg.reconstruct.m_max, cfg.reconstruct.tol_rel, opts);

    Field diff(as.grid.nx, as.grid.ny, 0.0);
    for (std::size_t k = 0; k < diff.v.size(); ++k)
        diff.v[k] = nr.f_hat.v[k] - as.phantom.f.v[k];
    const double err = weighted_l2_norm(diff, as.medium.c, as.domain.interior_mask,
                                        as.grid.h);
    const double ref = weighted_l2_norm(as.phantom.f, as.medium.c,
                                        as.domain.interior_mask, as.grid.h);
    const double rel = err / std::max(ref, 1e-300);

    write_field((dir / "f_hat.mtat").string(), nr.f_hat, cfg.config_hash);
    export_pgm(nr.f_hat, (dir / "f_hat.pgm").string(), PgmScaling::Symmetric,
               cfg.config_hash);
    export_pgm(as.phantom.f, (dir / "phantom.pgm").string(), PgmScaling::Symmetric,
               cfg.config_hash);
    json j = report_json(cfg, nr.report);
    j["final_relative_error"] = rel;
    write_json((dir / "report.json").string(), j);
    std::cout << "roundtrip: " << nr.report.iterations
              << " iterations, final relative error " << rel << " ("
              << nr.report.seconds_total << " s)\n";
    return 0;
}

int cmd_check_kernel(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const AttenuationReport rep = check_attenuation_condition(
        as.medium.kernel, cfg.run.T, as.grid.dt, 100, cfg.run.seed);
    std::cout << "kernel value sign        : " << (rep.value_sign_ok ? "ok" : "FAIL")
              << " (worst " << rep.worst_value << ")\n";
    std::cout << "kernel first difference  : "
              << (rep.first_difference_ok ? "ok" : "FAIL") << " (worst "
              << rep.worst_first_difference << ")\n";
    std::cout << "kernel second difference : "
              << (rep.second_difference_ok ? "ok" : "FAIL") << " (worst "
              << rep.worst_second_difference << ")\n";
    std::cout << "quadratic form probe     : "
              << (rep.quadratic_form_ok ? "ok" : "FAIL") << " (worst "
              << rep.worst_quadratic_form << ", " << rep.probes << " probes)\n";
    return rep.all_ok() ? 0 : 1;
}

int cmd_check_speed(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const SpeedConditionReport rep =
        check_speed_condition(as.medium, cfg.medium.x0, as.grid, as.domain);
    const TimeBounds tb =
        uniqueness_times(as.medium.c, cfg.medium.x0, as.domain, as.grid);
    std::cout << "speed condition margin   : " << rep.margin << " ("
              << (rep.ok ? "ok" : "FAIL") << ")\n";
    std::cout << "alpha_conv               : " << tb.alpha_conv << "\n";
    std::cout << "R_Omega, r_Omega, D_Omega: " << tb.R_Omega << ", " << tb.r_Omega
              << ", " << tb.D_Omega << "\n";
    std::cout << "T_uniqueness = D/c0      : " << tb.T_uniqueness << "\n";
    std::cout << "T1 half-bound D/(a c0)   : " << tb.T1_halfbound << "\n";
    std::cout << "run T                    : " << cfg.run.T << "\n";
    return rep.ok ? 0 : 1;
}

int cmd_phantom(const CommonArgs& args) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    fs::create_directories(args.out);
    const fs::path dir(args.out);
    write_field((dir / "phantom.mtat").string(), as.phantom.f, cfg.config_hash);
    export_pgm(as.phantom.f, (dir / "phantom.pgm").string(), PgmScaling::Symmetric,
               cfg.config_hash);
    std::cout << "phantom: wrote phantom.mtat, phantom.pgm in " << args.out << "\n";
    return 0;
}

int cmd_contraction(const CommonArgs& args, int n_samples) {
    const RunConfig cfg = load_with_overrides(args);
    const Assembled as = assemble(cfg);
    const SolveOptions opts = solve_options(args, cfg);
    const ContractionEstimate est = contraction_estimate(
        as.medium, as.grid, as.domain, cfg.run.T, n_samples, cfg.run.seed, opts);
    fs::create_directories(args.out);
    json j;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(cfg.config_hash));
    j["config"] = hash;
    j["samples"] = est.ratios;
    j["rho_max"] = est.rho_max;
    write_json((fs::path(args.out) / "contraction.json").string(), j);
    std::cout << "contraction: rho_max = " << est.rho_max << " over "
              << est.ratios.size() << " samples\n";
    return 0;
}

} // namespace

int cli_dispatch(int argc, const char* const* argv) {
    CLI::App app{"Thermoacoustic tomography with memory attenuation"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string trace_path;
    int n_samples = 10;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config, "run configuration file")
            ->required();
        cmd->add_option("--out", args.out, "output directory");
        cmd->add_option("--threads", args.threads, "worker threads");
        cmd->add_option("--seed", [&args](const std::vector<std::string>& v) {
            args.seed = std::stoull(v[0]);
            return true;
        }, "override the config seed");
        cmd->add_option("--snapshots", [&args](const std::vector<std::string>& v) {
            args.snapshots = std::stoi(v[0]);
            return true;
        }, "field snapshot stride (steps)");
    };

    CLI::App* c_forward = app.add_subcommand("forward", "solve and record the boundary trace");
    CLI::App* c_reconstruct = app.add_subcommand("reconstruct", "Neumann-series reconstruction from a trace");
    CLI::App* c_roundtrip = app.add_subcommand("roundtrip", "forward then reconstruct, report error vs the phantom");
    CLI::App* c_check_kernel = app.add_subcommand("check-kernel", "validate the attenuation kernel");
    CLI::App* c_check_speed = app.add_subcommand("check-speed", "validate the speed condition and time bounds");
    CLI::App* c_phantom = app.add_subcommand("phantom", "emit the phantom field and preview");
    CLI::App* c_energy = app.add_subcommand("energy-report", "per-step energy and dissipation CSV");
    CLI::App* c_contraction = app.add_subcommand("contraction", "empirical contraction-ratio probe");
    for (CLI::App* c : {c_forward, c_reconstruct, c_roundtrip, c_check_kernel,
                        c_check_speed, c_phantom, c_energy, c_contraction})
        add_common(c);
    c_reconstruct->add_option("--trace", trace_path, "trace file (default <out>/trace_raw.mtrc)");
    c_contraction->add_option("--samples", n_samples, "number of random phantoms");

    if (argc <= 1) {
        std::cout << app.help() << std::flush;
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
            std::cout << app.help() << std::flush;
            return 0;
        }
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (c_forward->parsed()) return cmd_forward(args, false);
        if (c_energy->parsed()) return cmd_forward(args, true);
        if (c_reconstruct->parsed()) return cmd_reconstruct(args, trace_path);
        if (c_roundtrip->parsed()) return cmd_roundtrip(args);
        if (c_check_kernel->parsed()) return cmd_check_kernel(args);
        if (c_check_speed->parsed()) return cmd_check_speed(args);
        if (c_phantom->parsed()) return cmd_phantom(args);
        if (c_contraction->parsed()) return cmd_contraction(args, n_samples);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

} // namespace mtat
