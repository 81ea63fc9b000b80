#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ddinfer/error.hpp"
#include "ddinfer/pipeline.hpp"

using namespace ddinfer;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return 2;
        case ErrorKind::numerical: return 3;
        case ErrorKind::io: return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Domain-decomposed model inference: reduced models coupled to sparse full-order models"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    app.add_option("--config", config_path, "pipeline JSON config (defaults to the built-in Burgers setup)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--workers", workers, "concurrent sweep iterations")->check(CLI::PositiveNumber);

    auto* generate = app.add_subcommand("generate", "run the Burgers reference solver and store snapshots");
    auto* decompose = app.add_subcommand("decompose", "split the domain and report singular value decay");

    auto* infer = app.add_subcommand("infer", "learn a model and write the bundle plus a report");
    std::string mode;
    infer->add_option("--mode", mode, "coupled | global-opinf | global-sfom");

    auto* simulate = app.add_subcommand("simulate", "integrate a learned model");
    std::string sim_model;
    simulate->add_option("--model", sim_model, "model directory")->required();
    std::string reference;
    simulate->add_option("--reference", reference, "reference matrix path, or 'snapshots'");
    bool no_reference = false;
    simulate->add_flag("--no-reference", no_reference, "skip the error report");

    auto* diagnose = app.add_subcommand("diagnose", "spectra and Gershgorin disks of learned linear operators");
    std::string diag_model;
    diagnose->add_option("--model", diag_model, "model directory")->required();

    auto* sweep = app.add_subcommand("sweep-interface", "retrain and simulate over 1D interface positions");
    SweepOptions sweep_opt;
    sweep->add_option("--a-lo", sweep_opt.a_lo, "first interface position");
    sweep->add_option("--a-hi", sweep_opt.a_hi, "last interface position");
    sweep->add_option("--step", sweep_opt.step, "position step");
    sweep->add_option("--repeats", sweep_opt.repeats, "runs per position")->check(CLI::PositiveNumber);
    sweep->add_option("--timing-repeats", sweep_opt.timing_repeats, "simulations timed per run");

    auto* cost = app.add_subcommand("cost", "asymptotic cost estimates and speedup grids");
    CostParams cp;
    cp.n = 500;
    cp.n_F = 250;
    cp.n_I = 2;
    cp.n_T = 360;
    cp.n_t = 720;
    cp.r = 10;
    cp.r_g = 10;
    cp.s = 3;
    cp.k = 2;
    cp.d = 1;
    double n_I = -1;
    std::string scaling = "surface";
    CostGridOptions grid_opt;
    cost->add_option("--n", cp.n, "total DOFs");
    cost->add_option("--nf", cp.n_F, "full-order subdomain DOFs");
    cost->add_option("--ni", n_I, "interface DOFs (estimated from --nf and --d when negative)");
    cost->add_option("--nt", cp.n_T, "training snapshots");
    cost->add_option("--online-steps", cp.n_t, "online time steps");
    cost->add_option("--r", cp.r, "reduced dimension");
    cost->add_option("--rg", cp.r_g, "global reduced dimension");
    cost->add_option("--s", cp.s, "stencil size");
    cost->add_option("--k", cp.k, "polynomial order");
    cost->add_option("--d", cp.d, "spatial dimension");
    cost->add_option("--scaling", scaling, "interface estimate: surface | power");
    cost->add_option("--points", grid_opt.points, "grid points along n_F/n");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (cost->parsed()) {
            if (n_I >= 0) {
                cp.n_I = n_I;
            } else if (cost->count("--nf") || cost->count("--d")) {
                cp.n_I.reset();
            }
            if (scaling == "surface")
                cp.scaling = InterfaceScaling::surface;
            else if (scaling == "power")
                cp.scaling = InterfaceScaling::power;
            else
                throw InvalidArgument("unknown interface scaling '" + scaling + "'");
            std::cout << cmd_cost(cp, grid_opt, out_dir).dump(2) << '\n';
            return 0;
        }
        if (diagnose->parsed()) {
            std::cout << cmd_diagnose(diag_model, out_dir, seed.value_or(0)).dump(2) << '\n';
            return 0;
        }

        PipelineConfig cfg = config_path.empty() ? burgers_pipeline_defaults() : load_pipeline_config(config_path);
        if (seed) cfg.seed = *seed;

        if (generate->parsed()) {
            std::cout << cmd_generate(cfg, out_dir).dump(2) << '\n';
        } else if (decompose->parsed()) {
            std::cout << cmd_decompose(cfg, out_dir).dump(2) << '\n';
        } else if (infer->parsed()) {
            if (!mode.empty()) cfg.mode = infer_mode_from_string(mode);
            const Json report = cmd_infer(cfg, out_dir);
            Json brief{{"mode", report.at("mode")}};
            for (const char* key : {"r", "retained_energy", "gap", "stability"})
                if (report.contains(key)) brief[key] = report.at(key);
            for (const char* key : {"rom", "fom"})
                if (report.contains(key)) brief[std::string(key) + "_chosen"] = report.at(key).at("chosen");
            std::cout << brief.dump(2) << '\n';
        } else if (simulate->parsed()) {
            if (no_reference)
                cfg.reference.reset();
            else if (!reference.empty())
                cfg.reference = reference;
            std::cout << cmd_simulate(cfg, sim_model, out_dir).dump(2) << '\n';
        } else if (sweep->parsed()) {
            sweep_opt.workers = workers;
            cmd_sweep_interface(cfg, sweep_opt, out_dir);
            std::cout << "wrote " << (std::filesystem::path(out_dir) / "sweep.csv").string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
