#include <doctest.h>

#include <cmath>
#include <limits>

#include "snapcube/admm.hpp"
#include "snapcube/parallel.hpp"
#include "snapcube/shear.hpp"
#include "support.hpp"

using namespace snapcube;

namespace {

/// [A^T A + s I]^{-1} (A^T y + zt) by dense LU.
Eigen::VectorXd dense_x_update(const Eigen::MatrixXd& a, const Eigen::VectorXd& y, const Eigen::VectorXd& zt,
                               double s) {
    const long n = a.cols();
    const Eigen::MatrixXd lhs = a.transpose() * a + s * Eigen::MatrixXd::Identity(n, n);
    return lhs.partialPivLu().solve(a.transpose() * y + zt);
}

/// Noiseless measurement of a blocky sheared cube.
Array2 blocky_measurement(const SensingOperator& op, std::uint64_t seed) {
    Array3 obj(op.nx(), op.ny(), op.num_channels());
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pos(0, op.nx() / 2);
    for (int b = 0; b < 3; ++b) {
        const std::size_t i0 = pos(rng), j0 = pos(rng);
        for (std::size_t k = 0; k < op.num_channels(); ++k) {
            const double amp = std::cos(0.7 * static_cast<double>(k) + b);
            for (std::size_t i = i0; i < std::min(op.nx(), i0 + 5); ++i)
                for (std::size_t j = j0; j < std::min(op.ny(), j0 + 6); ++j) obj(i, j, k) += amp;
        }
    }
    return op.forward(obj);
}

}  // namespace

TEST_CASE("x_update equals the dense normal-equation solve") {
    const std::size_t dims[][3] = {{4, 5, 3}, {6, 6, 4}};
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coupling(0.05, 3.0);
    for (const auto& d : dims) {
        const auto ap = testing::coin_aperture(d[0], measurement_width(d[1], d[2], 1), d[0] + d[2]);
        const SensingOperator op(ap, d[2]);
        const auto dense = testing::dense_phi(ap, d[2]);
        for (int draw = 0; draw < 5; ++draw) {
            const double eta = coupling(rng), tau = coupling(rng);
            const auto y = testing::random_image(d[0], op.measurement_width(), rng());
            const auto zt = testing::random_cube(d[0], op.measurement_width(), d[2], rng());
            const Array3 x = x_update(y, op, zt, eta, tau);
            const auto ref = dense_x_update(dense.a, testing::vec(y), testing::vec(zt), eta + tau);
            CHECK(testing::rel_err(testing::vec(x), ref) <= 1e-10);
        }
    }
}

TEST_CASE("x_update special cases") {
    const SensingOperator op(random_binary_aperture(4, 4, 3, 1, 3), 3);
    const Array3 zero(4, 6, 3);
    for (const auto out = x_update(Array2(4, 6), op, zero, 1.0, 1.0); double v : out.values()) CHECK(v == 0.0);

    CodedAperture blocked;
    blocked.pattern = Array2(4, 6);
    const SensingOperator dark(blocked, 3);
    const auto zt = testing::random_cube(4, 6, 3, 1);
    const Array3 x = x_update(testing::random_image(4, 6, 2), dark, zt, 0.5, 1.5);
    for (std::size_t n = 0; n < x.size(); ++n) CHECK(x[n] == doctest::Approx(zt[n] / 2.0));
}

TEST_CASE("x_update is jointly linear in (y, ztilde)") {
    const SensingOperator op(random_binary_aperture(5, 6, 4, 1, 8), 4);
    const auto y1 = testing::random_image(5, 9, 1), y2 = testing::random_image(5, 9, 2);
    const auto z1 = testing::random_cube(5, 9, 4, 3), z2 = testing::random_cube(5, 9, 4, 4);
    Array2 y(5, 9);
    Array3 z(5, 9, 4);
    for (std::size_t n = 0; n < y.size(); ++n) y[n] = 2 * y1[n] - 3 * y2[n];
    for (std::size_t n = 0; n < z.size(); ++n) z[n] = 2 * z1[n] - 3 * z2[n];
    const Array3 a = x_update(y1, op, z1, 0.7, 0.4), b = x_update(y2, op, z2, 0.7, 0.4), c = x_update(y, op, z, 0.7, 0.4);
    for (std::size_t n = 0; n < c.size(); ++n) CHECK(c[n] == doctest::Approx(2 * a[n] - 3 * b[n]).scale(1.0).epsilon(1e-12));
}

TEST_CASE("with no priors the fixed point solves the normal equations") {
    const auto ap = testing::coin_aperture(4, measurement_width(5, 3, 1), 6);
    const SensingOperator op(ap, 3);
    const auto dense = testing::dense_phi(ap, 3);
    const auto y = testing::random_image(4, 7, 9);
    SolverConfig cfg;
    cfg.lambda_tv = 0;
    cfg.rho_wavelet = 0;
    cfg.max_outer_iters = 300;
    const auto res = solve(y, op, cfg);
    const Eigen::VectorXd x = testing::vec(res.sheared);
    const Eigen::VectorXd yv = testing::vec(y);
    const Eigen::VectorXd grad = dense.a.transpose() * (yv - dense.a * x);
    CHECK(grad.norm() <= 1e-8 * (dense.a.transpose() * yv).norm());
}

TEST_CASE("one channel, open mask: the solution is the measurement") {
    CodedAperture open;
    open.pattern = Array2(6, 7, 1.0);
    const SensingOperator op(open, 1);
    const auto y = testing::random_image(6, 7, 1);
    SolverConfig cfg;
    cfg.lambda_tv = 0;
    cfg.rho_wavelet = 0;
    cfg.max_outer_iters = 60;
    const auto res = solve(y, op, cfg);
    for (std::size_t n = 0; n < y.size(); ++n) CHECK(res.sheared[n] == doctest::Approx(y[n]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("residual decreases over every ten-iteration window") {
    for (std::uint64_t seed : {1u, 2u}) {
        const SensingOperator op(random_binary_aperture(24, 24, 8, 1, seed), 8);
        const Array2 y = blocky_measurement(op, seed);
        SolverConfig cfg;
        cfg.max_outer_iters = 60;
        const auto h = solve(y, op, cfg).state.residual_history;
        REQUIRE(h.size() == 60);
        for (std::size_t k = 0; k + 10 < h.size(); ++k) CHECK(h[k] - h[k + 10] >= 1e-4);
    }
}

TEST_CASE("normalised-adjoint start reproduces the data from the first iterate") {
    const SensingOperator op(random_binary_aperture(8, 8, 4, 1, 3), 4);
    const Array2 y = blocky_measurement(op, 3);
    const SolverState s = initial_state(y, op, Initialization::normalized_adjoint);
    CHECK(relative_residual(y, op, s.x) <= 1e-14);
    CHECK(s.z == s.x);
    CHECK(s.p == s.x);
    for (double v : s.u.values()) CHECK(v == 0.0);
    const SolverState z = initial_state(y, op, Initialization::zero);
    for (double v : z.x.values()) CHECK(v == 0.0);
}

TEST_CASE("solver is deterministic and thread-count independent") {
    const SensingOperator op(random_binary_aperture(16, 16, 6, 1, 5), 6);
    const Array2 y = blocky_measurement(op, 5);
    SolverConfig cfg;
    cfg.max_outer_iters = 15;
    const int saved = num_threads();
    set_num_threads(1);
    const auto a = solve(y, op, cfg);
    set_num_threads(4);
    const auto b = solve(y, op, cfg);
    set_num_threads(saved);
    CHECK(a.sheared == b.sheared);
    CHECK(a.state.residual_history == b.state.residual_history);
}

TEST_CASE("checkpoint round trip and resume") {
    const SensingOperator op(random_binary_aperture(10, 10, 4, 1, 6), 4);
    const Array2 y = blocky_measurement(op, 6);
    SolverConfig cfg;
    cfg.max_outer_iters = 8;
    const auto half = solve(y, op, cfg);
    const auto dir = testing::scratch("checkpoint");
    save_checkpoint(dir, half.state);
    const SolverState loaded = load_checkpoint(dir);
    CHECK(loaded.x == half.state.x);
    CHECK(loaded.v == half.state.v);
    CHECK(loaded.iteration == 8);
    CHECK(loaded.residual_history == half.state.residual_history);
    CHECK(loaded.objective_history == half.state.objective_history);

    const auto resumed = solve(y, op, cfg, loaded);
    cfg.max_outer_iters = 16;
    const auto full = solve(y, op, cfg);
    CHECK(resumed.sheared == full.sheared);
    CHECK(resumed.state.iteration == 16);
    CHECK(resumed.state.residual_history == full.state.residual_history);
}

TEST_CASE("residual csv") {
    SolverState s;
    s.iteration = 2;
    s.residual_history = {0.5, 0.25};
    s.objective_history = {3.0, 1.5};
    CHECK(residual_csv(s) == "iteration,relative_residual,objective\n1,0.5,3\n2,0.25,1.5\n");
}

TEST_CASE("tolerance stop") {
    const SensingOperator op(random_binary_aperture(8, 8, 4, 1, 2), 4);
    const Array2 y = blocky_measurement(op, 2);
    SolverConfig cfg;
    cfg.max_outer_iters = 500;
    cfg.tolerance = 1e-3;
    const auto r = solve(y, op, cfg);
    CHECK(r.converged);
    CHECK(r.state.iteration < 500);
}

TEST_CASE("config validation and failure modes") {
    SolverConfig bad;
    bad.tau = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = {};
    bad.max_outer_iters = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = {};
    bad.lambda_tv = -1;
    CHECK_THROWS_AS(validate(bad), ConfigError);

    const SensingOperator op(random_binary_aperture(4, 4, 2, 1, 1), 2);
    Array2 y(4, 5, 1.0);
    y(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(solve(y, op, SolverConfig{}), SolverDivergence);
    CHECK_THROWS_AS(solve(Array2(4, 4), op, SolverConfig{}), ValidationError);
}

TEST_CASE("grid search scores rows in input order") {
    const SensingOperator op(random_binary_aperture(12, 12, 4, 1, 3), 4);
    Array3 obj(12, 12, 4);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t i = 3; i < 9; ++i)
            for (std::size_t j = 2; j < 10; ++j) obj(i, j, k) = 1.0;
    const Array2 y = op.forward(obj);
    SolverConfig base;
    base.max_outer_iters = 10;
    const auto rows = grid_search(y, op, base, {0.0, 0.05}, {0.0, 0.01}, shear(obj, 1));
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].lambda_tv == 0.0);
    CHECK(rows[0].rho_wavelet == 0.0);
    CHECK(rows[1].rho_wavelet == 0.01);
    CHECK(rows[2].lambda_tv == 0.05);
    for (const auto& r : rows) CHECK(std::isfinite(r.score));
}
