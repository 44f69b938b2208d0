// snapcube command-line driver.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "snapcube/error.hpp"
#include "snapcube/io.hpp"
#include "snapcube/pipeline.hpp"

namespace fs = std::filesystem;
namespace pl = snapcube::pipeline;

namespace {

int fail(const char* kind, int code, const std::string& message) {
    std::string flat = message;
    for (char& c : flat) {
        if (c == '\n') c = ' ';
    }
    std::cerr << "error: kind=" << kind << " code=" << code << " message=" << flat << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"snapshot interferometric 3D imaging simulator and reconstructor"};
    app.require_subcommand(1);

    fs::path sim_config, sim_out;
    auto* simulate = app.add_subcommand("simulate", "simulate measurements and ground truth from a config");
    simulate->add_option("-c,--config", sim_config, "JSON config")->required()->check(CLI::ExistingFile);
    simulate->add_option("-o,--out", sim_out, "output directory")->required();

    fs::path rec_input, rec_solver, rec_out;
    int rec_iters = 0;
    auto* reconstruct = app.add_subcommand("reconstruct", "ADMM reconstruction of a simulated measurement");
    reconstruct->add_option("-i,--input", rec_input, "simulate output directory")->required()->check(CLI::ExistingDirectory);
    reconstruct->add_option("-s,--solver", rec_solver, "solver JSON config")->check(CLI::ExistingFile);
    reconstruct->add_option("-n,--iterations", rec_iters, "override max_outer_iters");
    reconstruct->add_option("-o,--out", rec_out, "output directory")->required();

    fs::path dec_cube, dec_out;
    auto* decode = app.add_subcommand("decode", "Fourier depth decoding into a 16-bit image stack");
    decode->add_option("-c,--cube", dec_cube, "spectral cube container stem")->required();
    decode->add_option("-o,--out", dec_out, "output directory")->required();

    std::vector<fs::path> chr_sims, chr_recons;
    fs::path chr_out;
    auto* characterize = app.add_subcommand("characterize", "resolution, sensitivity and fidelity metrics");
    characterize->add_option("--sim", chr_sims, "simulate output directories")->required();
    characterize->add_option("--recon", chr_recons, "matching reconstruct output directories")->required();
    characterize->add_option("-o,--out", chr_out, "output directory")->required();

    std::vector<std::size_t> ora_dims{4, 5, 3};
    std::uint64_t ora_seed = 1;
    std::size_t ora_instances = 15;
    fs::path ora_report;
    auto* oracle = app.add_subcommand("oracle", "dense-oracle and adjoint checks of the sensing operator");
    oracle->add_option("-d,--dims", ora_dims, "nx ny n_channels")->expected(3)->delimiter(',');
    oracle->add_option("--seed", ora_seed, "random seed");
    oracle->add_option("--instances", ora_instances, "random adjoint instances");
    oracle->add_option("-r,--report", ora_report, "also write the report to this file");

    fs::path ds_config, ds_out;
    auto* dataset = app.add_subcommand("dataset", "training pairs for the learned reconstruction");
    dataset->add_option("-c,--config", ds_config, "JSON dataset config")->required()->check(CLI::ExistingFile);
    dataset->add_option("-o,--out", ds_out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("config", 2, e.what());
    }

    try {
        if (*simulate) {
            pl::run_simulate(pl::parse_simulate_config(pl::read_json(sim_config)), sim_out);
        } else if (*reconstruct) {
            snapcube::SolverConfig cfg;
            if (!rec_solver.empty()) cfg = pl::parse_solver_config(pl::read_json(rec_solver));
            if (rec_iters > 0) cfg.max_outer_iters = rec_iters;
            pl::run_reconstruct(rec_input, cfg, rec_out);
        } else if (*decode) {
            pl::run_decode(dec_cube, dec_out);
        } else if (*characterize) {
            pl::run_characterize(chr_sims, chr_recons, chr_out);
        } else if (*oracle) {
            const auto checks = pl::oracle_checks(ora_dims[0], ora_dims[1], ora_dims[2], ora_seed, ora_instances);
            std::ostringstream os;
            bool ok = true;
            for (const auto& c : checks) {
                ok = ok && c.passed;
                char worst[64];
                std::snprintf(worst, sizeof worst, "%.3e", c.worst);
                os << (c.passed ? "PASS " : "FAIL ") << c.name << " worst=" << worst << " (" << c.detail << ")\n";
            }
            os << (ok ? "oracle: all checks passed\n" : "oracle: FAILED\n");
            std::cout << os.str();
            if (!ora_report.empty()) snapcube::io::write_text(ora_report, os.str());
            if (!ok) return fail("numerical", 3, "oracle checks failed");
        } else if (*dataset) {
            pl::run_dataset(pl::parse_dataset_config(pl::read_json(ds_config)), ds_out);
        }
    } catch (const snapcube::ConfigError& e) {
        return fail("config", 2, e.what());
    } catch (const snapcube::ValidationError& e) {
        return fail("config", 2, e.what());
    } catch (const snapcube::NumericalError& e) {
        return fail("numerical", 3, e.what());
    } catch (const snapcube::IoError& e) {
        return fail("io", 4, e.what());
    } catch (const fs::filesystem_error& e) {
        return fail("io", 4, e.what());
    } catch (const std::exception& e) {
        return fail("internal", 1, e.what());
    }
    return 0;
}
