#include "snapcube/admm.hpp"

#include <cmath>
#include <sstream>

#include "snapcube/io.hpp"
#include "snapcube/metrics.hpp"
#include "snapcube/shear.hpp"
#include "snapcube/tv.hpp"
#include "snapcube/wavelet.hpp"

namespace snapcube {
namespace {

bool all_finite(const Array3& a) {
    for (double v : a.values()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace

void validate(const SolverConfig& cfg) {
    if (!(cfg.lambda_tv >= 0.0) || !(cfg.rho_wavelet >= 0.0)) {
        throw ConfigError("solver weights lambda_tv and rho_wavelet must be >= 0");
    }
    if (!(cfg.tau > 0.0) || !(cfg.eta > 0.0)) throw ConfigError("solver couplings tau and eta must be > 0");
    if (!(cfg.threshold() >= 0.0)) throw ConfigError("soft threshold must be >= 0");
    if (cfg.max_outer_iters < 1 || cfg.tv_inner_iters < 1) throw ConfigError("iteration counts must be >= 1");
    if (cfg.wavelet_levels < 0) throw ConfigError("wavelet_levels must be >= 0");
    if (!(cfg.tolerance >= 0.0)) throw ConfigError("tolerance must be >= 0");
}

Array3 x_update(const Array2& y, const SensingOperator& op, const Array3& ztilde, double eta, double tau) {
    const double s = eta + tau;
    if (!(s > 0.0)) throw ValidationError("coupling", "eta + tau must be positive");
    const Array2 phi_z = op.apply(ztilde);
    const Array2& psi = op.psi();
    Array2 weights(y.nx(), y.ny());
    for (std::size_t n = 0; n < weights.size(); ++n) weights[n] = (y[n] - phi_z[n] / s) / (s + psi[n]);
    Array3 x = op.apply_adjoint(weights);
    for (std::size_t n = 0; n < x.size(); ++n) x[n] += ztilde[n] / s;
    return x;
}

double relative_residual(const Array2& y, const SensingOperator& op, const Array3& x) {
    const Array2 fit = op.apply(x);
    double r = 0.0, ny = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) {
        const double d = y[n] - fit[n];
        r += d * d;
        ny += y[n] * y[n];
    }
    return ny > 0.0 ? std::sqrt(r / ny) : std::sqrt(r);
}

double objective(const Array2& y, const SensingOperator& op, const Array3& x, const SolverConfig& cfg) {
    const Array2 fit = op.apply(x);
    double data = 0.0;
    for (std::size_t n = 0; n < y.size(); ++n) data += (y[n] - fit[n]) * (y[n] - fit[n]);
    double sparsity = 0.0;
    if (cfg.rho_wavelet > 0.0) {
        for (double c : HaarWavelet3D(cfg.wavelet_levels).forward(x).values()) sparsity += std::abs(c);
    }
    const double tv = cfg.lambda_tv > 0.0 ? anisotropic_tv(x) : 0.0;
    return 0.5 * data + cfg.lambda_tv * tv + cfg.rho_wavelet * sparsity;
}

SolverState initial_state(const Array2& y, const SensingOperator& op, Initialization init) {
    SolverState start;
    start.u = Array3(op.nx(), op.measurement_width(), op.num_channels());
    start.v = start.u;
    start.x = init == Initialization::normalized_adjoint ? op.normalized_adjoint(y) : start.u;
    start.z = start.x;
    start.p = start.x;
    return start;
}

SolveResult solve(const Array2& y, const SensingOperator& op, const SolverConfig& cfg) {
    return solve(y, op, cfg, initial_state(y, op, cfg.initialization));
}

SolveResult solve(const Array2& y, const SensingOperator& op, const SolverConfig& cfg, SolverState state) {
    validate(cfg);
    if (y.nx() != op.nx() || y.ny() != op.measurement_width()) {
        throw ValidationError("dimension-mismatch", "measurement shape does not match the operator");
    }
    for (const Array3* a : {&state.x, &state.z, &state.u, &state.p, &state.v}) {
        if (a->nx() != op.nx() || a->ny() != op.measurement_width() || a->nz() != op.num_channels()) {
            throw ValidationError("dimension-mismatch", "solver state shape does not match the operator");
        }
    }

    const HaarWavelet3D wavelet(cfg.wavelet_levels);
    const double threshold = cfg.threshold();
    const double tv_weight = cfg.lambda_tv / cfg.eta;
    const std::size_t count = state.x.size();
    Array3 ztilde(state.x.nx(), state.x.ny(), state.x.nz());
    Array3 work = ztilde;

    SolveResult result;
    const int first = state.iteration;
    for (int it = first; it < first + cfg.max_outer_iters; ++it) {
        for (std::size_t n = 0; n < count; ++n) {
            ztilde[n] = cfg.eta * (state.p[n] + state.v[n]) + cfg.tau * (state.z[n] + state.u[n]);
        }
        state.x = x_update(y, op, ztilde, cfg.eta, cfg.tau);

        for (std::size_t n = 0; n < count; ++n) work[n] = state.x[n] - state.v[n];
        state.p = tv_denoise(work, tv_weight, cfg.tv_inner_iters);
        for (std::size_t n = 0; n < count; ++n) state.v[n] += state.p[n] - state.x[n];

        for (std::size_t n = 0; n < count; ++n) work[n] = state.x[n] - state.u[n];
        if (threshold > 0.0) {
            state.z = wavelet.inverse(soft_threshold(wavelet.forward(work), threshold));
        } else {
            state.z = work;
        }
        for (std::size_t n = 0; n < count; ++n) state.u[n] += state.z[n] - state.x[n];

        state.iteration = it + 1;
        const double r = relative_residual(y, op, state.x);
        state.residual_history.push_back(r);
        state.objective_history.push_back(objective(y, op, state.x, cfg));

        if (!std::isfinite(r) || !all_finite(state.x) || !all_finite(state.z) || !all_finite(state.p)) {
            throw SolverDivergence("non-finite iterate at iteration " + std::to_string(state.iteration),
                                   std::move(state));
        }
        const auto& h = state.residual_history;
        // Growth from round-off level is not divergence: also require a fit worse than x = 0.
        if (h.size() > 5 && h.back() > 10.0 * h[h.size() - 6] && h.back() > 1.0) {
            throw SolverDivergence("residual grew more than 10x over 5 iterations at iteration " +
                                       std::to_string(state.iteration),
                                   std::move(state));
        }
        if (cfg.tolerance > 0.0 && h.size() >= 2) {
            const double prev = h[h.size() - 2];
            if (std::abs(prev - h.back()) < cfg.tolerance * prev) {
                result.converged = true;
                break;
            }
        }
    }
    result.sheared = state.x;
    result.state = std::move(state);
    return result;
}

void save_checkpoint(const std::filesystem::path& dir, const SolverState& state) {
    const io::Attributes attrs{{"type", "SolverIterate"},
                               {"iteration", std::to_string(state.iteration)},
                               {"axes", "x y_sheared lambda"}};
    io::write_array(dir / "x", state.x, attrs);
    io::write_array(dir / "z", state.z, attrs);
    io::write_array(dir / "u", state.u, attrs);
    io::write_array(dir / "p", state.p, attrs);
    io::write_array(dir / "v", state.v, attrs);
    io::write_text(dir / "residuals.csv", residual_csv(state));
}

SolverState load_checkpoint(const std::filesystem::path& dir) {
    SolverState s;
    io::Header h;
    s.x = io::read_array3(dir / "x", &h);
    s.z = io::read_array3(dir / "z");
    s.u = io::read_array3(dir / "u");
    s.p = io::read_array3(dir / "p");
    s.v = io::read_array3(dir / "v");
    s.iteration = std::stoi(h.attrs.at("iteration"));
    std::istringstream in(io::read_text(dir / "residuals.csv"));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string it, r, obj;
        std::getline(row, it, ',');
        std::getline(row, r, ',');
        std::getline(row, obj, ',');
        s.residual_history.push_back(io::parse_double(r));
        s.objective_history.push_back(io::parse_double(obj));
    }
    return s;
}

std::string residual_csv(const SolverState& state) {
    std::ostringstream os;
    os << "iteration,relative_residual,objective\n";
    const int first = state.iteration - static_cast<int>(state.residual_history.size());
    for (std::size_t n = 0; n < state.residual_history.size(); ++n) {
        os << first + static_cast<int>(n) + 1 << ',' << io::format_double(state.residual_history[n]) << ','
           << io::format_double(state.objective_history[n]) << '\n';
    }
    return os.str();
}

std::vector<GridPoint> grid_search(const Array2& y, const SensingOperator& op, const SolverConfig& base,
                                   const std::vector<double>& lambdas, const std::vector<double>& rhos,
                                   const Array3& sheared_truth) {
    std::vector<GridPoint> rows;
    for (double l : lambdas) {
        for (double r : rhos) {
            SolverConfig cfg = base;
            cfg.lambda_tv = l;
            cfg.rho_wavelet = r;
            cfg.soft_threshold.reset();
            const SolveResult res = solve(y, op, cfg);
            GridPoint g;
            g.lambda_tv = l;
            g.rho_wavelet = r;
            g.score = psnr(unshear(res.sheared, op.aperture().dispersion_step),
                           unshear(sheared_truth, op.aperture().dispersion_step));
            g.final_residual = res.state.residual_history.back();
            rows.push_back(g);
        }
    }
    return rows;
}

}  // namespace snapcube
