#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snapcube/array.hpp"
#include "snapcube/error.hpp"
#include "snapcube/sensing.hpp"

namespace snapcube {

/// Starting iterate. `zero`: x = z = p = 0, so the first x-update returns
/// Phi^T[y / (eta + tau + psi)]. `normalized_adjoint`: x = z = p = Phi^T(y / psi),
/// which already fits noiseless data exactly.
enum class Initialization { zero, normalized_adjoint };

/// Hyperparameters of the ADMM-TV-Wavelet solver for
///   1/2 ||y - Phi x||^2 + lambda_tv TV(x) + rho ||T^-1 x||_1.
/// Defaults are engineering choices, not measured optima.
struct SolverConfig {
    double lambda_tv = 0.02;
    double rho_wavelet = 0.005;
    double tau = 1.0;  // x = z coupling
    double eta = 1.0;  // x = p coupling
    /// Wavelet shrinkage threshold; rho / tau when unset.
    std::optional<double> soft_threshold;
    int max_outer_iters = 100;
    int tv_inner_iters = 20;
    int wavelet_levels = 2;
    /// Stop once |r_{k-1} - r_k| < tolerance * r_{k-1}; 0 disables.
    double tolerance = 0.0;
    Initialization initialization = Initialization::zero;

    double threshold() const { return soft_threshold.value_or(rho_wavelet / tau); }
};

void validate(const SolverConfig& cfg);

/// Iterates of the splitting, all in the sheared frame.
struct SolverState {
    Array3 x, z, u, p, v;
    int iteration = 0;
    std::vector<double> residual_history;   // ||y - Phi x|| / ||y||
    std::vector<double> objective_history;
};

struct SolveResult {
    Array3 sheared;  // final x
    SolverState state;
    bool converged = false;  // stopped on tolerance before max_outer_iters
};

/// Thrown on divergence (residual up 10x over 5 iterations) or a non-finite
/// iterate. Carries the state at the failing iteration.
class SolverDivergence : public NumericalError {
public:
    SolverDivergence(const std::string& what, SolverState state)
        : NumericalError(what), state_(std::move(state)) {}
    const SolverState& state() const noexcept { return state_; }

private:
    SolverState state_;
};

/// Closed-form minimiser of
///   1/2 ||y - Phi x||^2 + (eta + tau)/2 ||x - ztilde / (eta + tau)||^2,
/// i.e. [Phi^T Phi + (eta + tau) I] x = Phi^T y + ztilde, via the Woodbury
/// identity and the diagonal of Phi Phi^T:
///   x = ztilde / s + Phi^T[(y - Phi ztilde / s) / (s + psi)],  s = eta + tau.
Array3 x_update(const Array2& y, const SensingOperator& op, const Array3& ztilde, double eta, double tau);

/// u = v = 0; x = z = p per `init` (the normalised adjoint is 0 where psi = 0).
SolverState initial_state(const Array2& y, const SensingOperator& op, Initialization init);
/// Runs outer iterations in the order x, p, v, c, z, u from initial_state.
SolveResult solve(const Array2& y, const SensingOperator& op, const SolverConfig& cfg);

/// Resumes from a saved state; `state.iteration` outer steps are assumed done.
SolveResult solve(const Array2& y, const SensingOperator& op, const SolverConfig& cfg, SolverState start);

double objective(const Array2& y, const SensingOperator& op, const Array3& x, const SolverConfig& cfg);
double relative_residual(const Array2& y, const SensingOperator& op, const Array3& x);

/// Checkpoint: one container per iterate (x, z, u, p, v) under `dir`, plus
/// histories as CSV.
void save_checkpoint(const std::filesystem::path& dir, const SolverState& state);
SolverState load_checkpoint(const std::filesystem::path& dir);
/// `iteration,relative_residual,objective` rows.
std::string residual_csv(const SolverState& state);

/// One row of a hyperparameter sweep.
struct GridPoint {
    double lambda_tv = 0.0;
    double rho_wavelet = 0.0;
    double score = 0.0;  // PSNR against `truth` in dB
    double final_residual = 0.0;
};

/// Solves for every (lambda_tv, rho) pair and scores the object-frame result
/// against a known sheared truth by PSNR. Rows follow the input order.
std::vector<GridPoint> grid_search(const Array2& y, const SensingOperator& op, const SolverConfig& base,
                                   const std::vector<double>& lambdas, const std::vector<double>& rhos,
                                   const Array3& sheared_truth);

}  // namespace snapcube
