// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "snapcube/admm.hpp"
#include "snapcube/interferometer.hpp"
#include "snapcube/io.hpp"
#include "snapcube/metrics.hpp"
#include "snapcube/parallel.hpp"
#include "snapcube/pipeline.hpp"
#include "snapcube/sensing.hpp"
#include "snapcube/shear.hpp"
#include "snapcube/tv.hpp"
#include "snapcube/wavelet.hpp"
#include "support.hpp"

using namespace snapcube;
namespace pl = snapcube::pipeline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double inner(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
    return s;
}

SolverConfig tuned_solver() {
    SolverConfig s;
    s.lambda_tv = 0.03;
    s.rho_wavelet = 0.002;
    s.tau = 0.2;
    s.eta = 0.3;
    return s;
}

// ---- 1 ----

Outcome formula_tables() {
    Outcome o;
    const double bw[] = {20, 18, 14, 7, 3.5};
    const int reference_um[] = {15, 17, 22, 43, 87};
    for (int n = 0; n < 5; ++n) {
        const double lib = axial_resolution_um(830.0, bw[n]);
        const double direct = 0.44 * 830.0 * 830.0 / bw[n] / 1000.0;
        o.require(std::abs(lib - direct) <= 1e-9 * direct, "axial formula at " + fmt("%g nm", bw[n]));
        o.require(std::abs(std::lround(lib) - reference_um[n]) <= 1, "axial table at " + fmt("%g nm", bw[n]));
    }
    const double sr = spectral_resolution_nm(6.5, 1.66, 100.0);
    o.require(std::abs(sr - 0.108) <= 0.0005, "spectral resolution " + fmt("%.4f", sr));
    o.require(std::abs(sr - 0.1) <= 0.01, "spectral resolution vs 0.1 nm");
    const double sens = theoretical_sensitivity_db(30000.0);
    o.require(std::abs(sens - 10.0 * std::log10(30000.0)) <= 1e-12, "sensitivity formula");
    o.require(std::abs(sens - 44.77) <= 0.005, "sensitivity " + fmt("%.3f", sens));
    o.note("axial 20 nm -> " + fmt("%.2f um", axial_resolution_um(830, 20)) + ", spectral " + fmt("%.4f nm", sr) +
           ", sensitivity " + fmt("%.2f dB", sens));
    return o;
}

// ---- 2 ----

Outcome operator_correctness() {
    Outcome o;
    double worst_adj = 0;
    int instances = 0;
    const std::size_t adims[][3] = {{16, 16, 8}, {5, 9, 4}, {7, 3, 11}, {32, 24, 16}};
    for (const auto& d : adims) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            for (int step : {1, -1}) {
                auto ap = random_binary_aperture(d[0], d[1], d[2], step, 500 + seed);
                const SensingOperator op(ap, d[2]);
                const auto x = testing::random_cube(d[0], op.measurement_width(), d[2], seed * 7 + 1);
                const auto y = testing::random_image(d[0], op.measurement_width(), seed * 7 + 2);
                const double lhs = inner(op.apply(x).values(), y.values());
                const double rhs = inner(x.values(), op.apply_adjoint(y).values());
                worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)));
                ++instances;
            }
        }
    }
    o.require(worst_adj <= 1e-12, "adjoint identity " + fmt("%.2e", worst_adj));

    std::uint64_t worst_ulp = 0;
    bool psi_exact = true, lib_dense_equal = true;
    int dense_cases = 0;
    const std::size_t ddims[][3] = {{4, 5, 3}, {6, 6, 4}, {3, 7, 6}, {2, 2, 1}, {10, 10, 10}, {1, 9, 5},
                                    {8, 4, 2}, {5, 5, 7}, {12, 9, 9}, {20, 22, 20}};
    for (const auto& d : ddims) {
        if (d[0] * d[1] * d[2] > 10000) continue;
        for (int step : {1, -1, 2}) {
            if (d[2] == 1 && step != 1) continue;
            auto ap = testing::coin_aperture(d[0], measurement_width(d[1], d[2], step), d[0] * 131 + d[1] * 7 + d[2]);
            ap.dispersion_step = step;
            const SensingOperator op(ap, d[2]);
            const auto dense = testing::dense_phi(ap, d[2]);
            const auto x = testing::random_cube(d[0], op.measurement_width(), d[2], 3);
            const auto y = testing::random_image(d[0], op.measurement_width(), 4);
            const auto dx = testing::naive_multiply(dense.a, testing::vec(x));
            const Eigen::MatrixXd at = dense.a.transpose();
            const auto dty = testing::naive_multiply(at, testing::vec(y));
            const Array2 ax = op.apply(x);
            const Array3 aty = op.apply_adjoint(y);
            for (std::size_t n = 0; n < dx.size(); ++n) worst_ulp = std::max(worst_ulp, testing::ulp_distance(ax[n], dx[n]));
            for (std::size_t n = 0; n < dty.size(); ++n) worst_ulp = std::max(worst_ulp, testing::ulp_distance(aty[n], dty[n]));
            const Eigen::VectorXd diag = (dense.a * at).diagonal();
            for (std::size_t n = 0; n < op.psi().size(); ++n) psi_exact = psi_exact && op.psi()[n] == diag(static_cast<long>(n));
            if (static_cast<std::size_t>(dense.a.size()) <= 4'000'000) {
                const DenseMatrix lib = dense_oracle(op);
                for (std::size_t r = 0; r < lib.rows && lib_dense_equal; ++r)
                    for (std::size_t c = 0; c < lib.cols; ++c)
                        lib_dense_equal = lib_dense_equal && lib(r, c) == dense.a(static_cast<long>(r), static_cast<long>(c));
            }
            ++dense_cases;
        }
    }
    o.require(worst_ulp <= 4, "dense agreement " + std::to_string(worst_ulp) + " ulp");
    o.require(psi_exact, "psi equals diag(A A^T)");
    o.require(lib_dense_equal, "library dense oracle equals independent construction");
    o.note(std::to_string(instances) + " adjoint instances worst " + fmt("%.1e", worst_adj) + ", " +
           std::to_string(dense_cases) + " dense cases worst " + std::to_string(worst_ulp) + " ulp, psi exact");
    return o;
}

// ---- 3 ----

Outcome x_update_exactness() {
    Outcome o;
    double worst = 0;
    const std::size_t dims[][3] = {{4, 5, 3}, {6, 6, 4}};
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> coupling(0.01, 5.0);
    for (const auto& d : dims) {
        const auto ap = testing::coin_aperture(d[0], measurement_width(d[1], d[2], 1), 40 + d[2]);
        const SensingOperator op(ap, d[2]);
        const auto a = testing::dense_phi(ap, d[2]).a;
        const long n = a.cols();
        for (int draw = 0; draw < 5; ++draw) {
            const double eta = coupling(rng), tau = coupling(rng);
            const auto y = testing::random_image(d[0], op.measurement_width(), rng());
            const auto zt = testing::random_cube(d[0], op.measurement_width(), d[2], rng());
            const Eigen::MatrixXd lhs = a.transpose() * a + (eta + tau) * Eigen::MatrixXd::Identity(n, n);
            const Eigen::VectorXd ref = lhs.partialPivLu().solve(a.transpose() * testing::vec(y) + testing::vec(zt));
            worst = std::max(worst, testing::rel_err(testing::vec(x_update(y, op, zt, eta, tau)), ref));
        }
    }
    o.require(worst <= 1e-10, "relative error " + fmt("%.2e", worst));
    o.note("10 draws, worst relative error " + fmt("%.2e", worst));
    return o;
}

// ---- 4 ----

Outcome solver_contract() {
    Outcome o;
    pl::SimulateConfig c;
    c.grid.nx = c.grid.ny = 64;
    c.grid.num_channels = 16;
    c.phantom.kind = "double_layer";
    c.phantom.text = "E";
    c.phantom.pose.scale = 8;
    c.phantom.planes = {2, 5};
    c.phantom.stagger_px = 6;
    c.phantom.occlusion = true;
    c.mask.seed = 1;
    const auto sim = pl::simulate(c);
    const int saved = num_threads();
    set_num_threads(1);
    SolverConfig s = tuned_solver();
    s.max_outer_iters = 100;
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = pl::reconstruct(sim.raw, sim.aperture, c.grid.spectral(), s);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    set_num_threads(saved);
    const auto& h = r.result.state.residual_history;
    double min_window = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 10 < h.size(); ++k) min_window = std::min(min_window, h[k] - h[k + 10]);
    const auto base = pl::adjoint_baseline(sim.raw, sim.aperture, c.grid.spectral());
    const double gain = psnr(r.cube.data, sim.truth_ac.data) - psnr(base.data, sim.truth_ac.data);
    o.require(h.size() == 100, "iteration count");
    o.require(h.back() <= 0.05, "final residual " + fmt("%.4f", h.back()));
    o.require(min_window >= 1e-4, "windowed decrease " + fmt("%.2e", min_window));
    o.require(gain >= 6.0, "PSNR gain " + fmt("%.2f dB", gain));
    o.require(secs < 120.0, "single-threaded runtime " + fmt("%.1f s", secs));
    o.note("residual " + fmt("%.4f", h.back()) + ", min 10-window decrease " + fmt("%.2e", min_window) +
           ", gain over baseline " + fmt("%.2f dB", gain) + ", solve " + fmt("%.1f s", secs));
    return o;
}

// ---- 5 ----

std::vector<double> recovered_profile(const pl::SimulateConfig& c) {
    const auto sim = pl::simulate(c);
    const auto r = pl::reconstruct(sim.raw, sim.aperture, c.grid.spectral(), tuned_solver());
    return axial_profile(decode_depth(r.cube));
}

bool local_max(const std::vector<double>& p, std::size_t k) {
    const bool left = k == 0 || p[k] > p[k - 1];
    const bool right = k + 1 == p.size() || p[k] > p[k + 1];
    return left && right;
}

Outcome depth_pipeline() {
    Outcome o;
    pl::SimulateConfig c;
    c.grid.nx = c.grid.ny = 64;
    c.grid.num_channels = 16;
    c.phantom.kind = "glyph";
    c.phantom.text = "E";
    c.phantom.pose.scale = 6;
    std::string found;
    for (std::size_t plane : {1u, 2u, 3u, 5u, 6u}) {
        c.phantom.planes = {plane};
        const auto p = recovered_profile(c);
        const auto peak = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        o.require(peak + 1 >= plane && peak <= plane + 1, "plane " + std::to_string(plane) + " decoded at " +
                                                                std::to_string(peak));
        found += (found.empty() ? "" : ",") + std::to_string(plane) + "->" + std::to_string(peak);
    }

    c.phantom.kind = "double_layer";
    c.phantom.planes = {1, 7};
    c.phantom.stagger_px = 17;
    c.phantom.occlusion = true;
    const auto p = recovered_profile(c);
    auto peak_near = [&](std::size_t t) -> std::optional<std::size_t> {
        std::optional<std::size_t> best;
        for (std::size_t k = t - 1; k <= std::min(t + 1, p.size() - 1); ++k)
            if (local_max(p, k) && (!best || p[k] > p[*best])) best = k;
        return best;
    };
    const auto a = peak_near(1), b = peak_near(7);
    o.require(a.has_value() && b.has_value(), "two decoded local maxima near planes 1 and 7");
    if (a && b) {
        const double valley = *std::min_element(p.begin() + static_cast<long>(*a), p.begin() + static_cast<long>(*b) + 1);
        const double ratio = valley / std::min(p[*a], p[*b]);
        o.require(ratio < 0.5, "valley ratio " + fmt("%.2f", ratio));
        o.note("single planes " + found + "; double layer peaks at " + std::to_string(*a) + "," +
               std::to_string(*b) + " valley/peak " + fmt("%.2f", ratio));
    }
    return o;
}

// ---- 6 ----

Outcome characterization() {
    Outcome o;
    // Axial: noiseless mirror at two bandwidths.
    for (double bw : {20.0, 14.0}) {
        pl::SimulateConfig c;
        c.grid.nx = c.grid.ny = 32;
        c.grid.num_channels = 64;
        c.grid.channel_spacing_nm = 1.0;
        c.fwhm_bandwidth_nm = bw;
        c.phantom.kind = "mirror";
        c.phantom.planes = {8};
        const auto sim = pl::simulate(c);
        const auto r = pl::reconstruct(sim.raw, sim.aperture, c.grid.spectral(), tuned_solver());
        double fwhm = std::numeric_limits<double>::quiet_NaN();
        try {
            fwhm = axial_psf_fwhm_um(decode_depth(r.cube));
        } catch (const NumericalError&) {
        }
        // Coherence length 0.44 lambda^2 / bandwidth.
        const double theory = 0.44 * 830.0 * 830.0 / bw / 1000.0;
        o.require(std::abs(fwhm - theory) <= 0.2 * theory, "axial FWHM at " + fmt("%g nm", bw) + " = " + fmt("%.2f", fwhm));
        o.note("FWHM " + fmt("%g nm: ", bw) + fmt("%.2f um", fwhm) + " vs " + fmt("%.2f", theory));
    }

    // Lateral: bar groups at the same physical depth for CR 4, 8, 16.
    std::vector<double> finest;
    for (std::size_t cr : {4u, 8u, 16u}) {
        pl::SimulateConfig c;
        c.grid.nx = c.grid.ny = 64;
        c.grid.num_channels = cr;
        c.phantom.kind = "bars";
        c.phantom.periods_px = {2, 4, 6, 8};
        c.phantom.planes = {cr / 4};
        const auto sim = pl::simulate(c);
        const auto r = pl::reconstruct(sim.raw, sim.aperture, c.grid.spectral(), tuned_solver());
        const auto vol = decode_depth(r.cube);
        const auto lr = lateral_resolution(vol.amplitude.slice_copy(cr / 4), pl::phantom_bar_groups(c));
        finest.push_back(lr.finest_period_px ? static_cast<double>(*lr.finest_period_px)
                                             : std::numeric_limits<double>::infinity());
    }
    o.require(finest[0] <= finest[1] && finest[1] <= finest[2], "finest period monotone in CR");
    o.note("finest period CR4/8/16: " + fmt("%g", finest[0]) + "/" + fmt("%g", finest[1]) + "/" + fmt("%g", finest[2]) + " px");

    // Sensitivity: shot-noise-limited mirror.
    pl::SimulateConfig c;
    c.grid.nx = c.grid.ny = 32;
    c.grid.num_channels = 128;
    c.grid.channel_spacing_nm = 0.5;
    c.phantom.kind = "mirror";
    c.phantom.planes = {4};
    c.noise.enabled = true;
    c.noise.peak_electrons = 30000.0;
    c.noise.quantize = true;
    c.noise.noisy_dc_frames = true;
    c.noise.seed = 1;
    const auto sim = pl::simulate(c);
    const auto r = pl::reconstruct(sim.raw, sim.aperture, c.grid.spectral(), tuned_solver());
    double sens = std::numeric_limits<double>::quiet_NaN();
    try {
        sens = sensitivity_db(decode_depth(r.cube));
    } catch (const NumericalError&) {
    }
    o.require(sens >= 38.0 && sens <= 44.77, "sensitivity " + fmt("%.2f dB", sens));
    o.note("sensitivity " + fmt("%.2f dB", sens));
    return o;
}

// ---- 7 ----

Outcome proximal_pieces() {
    Outcome o;
    double worst_pr = 0, worst_parseval = 0;
    const std::size_t dims[][3] = {{8, 8, 8}, {4, 6, 5}, {7, 3, 9}, {16, 31, 16}, {64, 79, 16}};
    for (const auto& d : dims) {
        for (int levels : {1, 2, 3}) {
            const HaarWavelet3D t(levels);
            const auto x = testing::random_cube(d[0], d[1], d[2], d[1] + levels);
            const Array3 c = t.forward(x);
            const Array3 back = t.inverse(c);
            const double nx = std::sqrt(inner(x.values(), x.values()));
            double e = 0;
            for (std::size_t n = 0; n < x.size(); ++n) e += (back[n] - x[n]) * (back[n] - x[n]);
            worst_pr = std::max(worst_pr, std::sqrt(e) / nx);
            worst_parseval = std::max(worst_parseval, std::abs(std::sqrt(inner(c.values(), c.values())) - nx) / nx);
        }
    }
    o.require(worst_pr <= 1e-12, "perfect reconstruction " + fmt("%.1e", worst_pr));
    o.require(worst_parseval <= 1e-12, "Parseval " + fmt("%.1e", worst_parseval));

    // Grid-search prox of 1/2 (x - c)^2 + t |x|.
    const double h = 1e-4;
    double worst_prox = 0;
    for (double t : {0.0, 0.2, 1.0, 3.0}) {
        for (double cval : {-4.1, -1.0, -0.3, 0.0, 0.15, 0.999, 2.5}) {
            double best = cval, best_f = std::numeric_limits<double>::infinity();
            for (double x = -10.0; x <= 10.0; x += h) {
                const double f = 0.5 * (x - cval) * (x - cval) + t * std::abs(x);
                if (f < best_f) best_f = f, best = x;
            }
            worst_prox = std::max(worst_prox, std::abs(soft_threshold(cval, t) - best));
        }
    }
    o.require(worst_prox <= h, "soft threshold vs grid " + fmt("%.1e", worst_prox));

    const auto x = testing::random_cube(9, 11, 4, 5);
    o.require(tv_denoise(x, 0.0, 20) == x, "TV identity at zero weight");
    o.note("PR " + fmt("%.1e", worst_pr) + ", Parseval " + fmt("%.1e", worst_parseval) + ", prox vs grid " +
           fmt("%.1e", worst_prox) + ", TV(0) exact");
    return o;
}

// ---- 8 ----

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = testing::slurp(e.path());
    }
    return out;
}

int run(const std::string& threads, const std::string& args, const fs::path& log) {
    const std::string cmd = "SNAPCUBE_NUM_THREADS=" + threads + " OMP_NUM_THREADS=" + threads + " '" +
                            std::string(SNAPCUBE_CLI_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
    return std::system(cmd.c_str());
}

Outcome determinism() {
    Outcome o;
    const fs::path root = testing::scratch("acceptance_determinism");
    pl::SimulateConfig sc;
    sc.grid.nx = 24;
    sc.grid.ny = 24;
    sc.grid.num_channels = 8;
    sc.phantom.kind = "bars";
    sc.phantom.periods_px = {2, 4};
    sc.phantom.planes = {1};
    sc.noise.enabled = true;
    sc.noise.peak_electrons = 30000.0;
    sc.noise.noisy_dc_frames = true;
    sc.compression_ratios = {4, 8};
    pl::write_json(root / "sim.json", pl::to_json(sc));
    pl::write_json(root / "solver.json", pl::to_json(tuned_solver()));
    pl::DatasetConfig dc;
    dc.grid = {24, 24, 830.0, 2.5, 8, 6.5};
    dc.count = 10;
    dc.validation_fraction = 0.2;
    dc.noise.enabled = true;
    dc.noise.photon_scale = 3000.0;
    pl::write_json(root / "dataset.json", pl::to_json(dc));

    std::vector<std::string> compared;
    for (const char* tag : {"a", "b", "c"}) {
        const std::string threads = std::string(tag) == "c" ? "4" : "1";
        const fs::path d = root / tag;
        fs::create_directories(d);
        const std::string q = "'" + d.string() + "/";
        const std::vector<std::pair<std::string, std::string>> steps = {
            {"simulate", "simulate -c '" + (root / "sim.json").string() + "' -o " + q + "sim'"},
            {"reconstruct", "reconstruct -i " + q + "sim/cr_8' -s '" + (root / "solver.json").string() + "' -n 30 -o " + q + "rec'"},
            {"decode", "decode -c " + q + "rec/recon' -o " + q + "dec'"},
            {"characterize", "characterize --sim " + q + "sim/cr_8' --recon " + q + "rec' -o " + q + "chr'"},
            {"oracle", "oracle -d 6,7,5 --seed 3 -r " + q + "oracle/report.txt'"},
            {"dataset", "dataset -c '" + (root / "dataset.json").string() + "' -o " + q + "ds'"},
        };
        for (const auto& [name, args] : steps) {
            const int rc = run(threads, args, root / ("log_" + std::string(tag) + "_" + name + ".txt"));
            o.require(rc == 0, name + " exit status in run " + tag);
        }
    }
    const auto a = tree_bytes(root / "a"), b = tree_bytes(root / "b"), c = tree_bytes(root / "c");
    o.require(a.size() > 20, "output tree populated");
    o.require(a == b, "two runs byte-identical");
    o.require(a == c, "1 vs 4 threads byte-identical");
    if (a != b || a != c) {
        for (const auto& [k, v] : a) {
            if (!b.count(k) || b.at(k) != v || !c.count(k) || c.at(k) != v) o.note("differs: " + k);
        }
    }
    o.note(std::to_string(a.size()) + " files from 6 commands compared across 2 runs and 1 vs 4 threads");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"formula tables", formula_tables},
        {"operator correctness", operator_correctness},
        {"x_update exactness", x_update_exactness},
        {"solver contract", solver_contract},
        {"depth pipeline", depth_pipeline},
        {"characterization protocols", characterization},
        {"proximal pieces", proximal_pieces},
        {"determinism", determinism},
    };
    bool all = true;
    for (std::size_t n = 0; n < criteria.size(); ++n) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[n].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all = all && o.pass;
        std::printf("criterion %zu %s: %s (%.1f s) %s\n", n + 1, criteria[n].first.c_str(), o.pass ? "PASS" : "FAIL", secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
