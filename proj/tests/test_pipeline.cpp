#include <doctest.h>

#include <cmath>

#include "snapcube/error.hpp"
#include "snapcube/io.hpp"
#include "snapcube/noise.hpp"
#include "snapcube/pipeline.hpp"
#include "snapcube/shear.hpp"
#include "support.hpp"

using namespace snapcube;
using namespace snapcube::pipeline;

namespace {

Json small_config() {
    return Json::parse(R"({
        "grid": {"nx": 8, "ny": 8, "center_wavelength_nm": 830, "channel_spacing_nm": 2.5, "num_channels": 4},
        "source": {"fwhm_bandwidth_nm": 20},
        "phantom": {"kind": "mirror", "planes": [1]},
        "mask": {"seed": 3},
        "noise": {"enabled": false}
    })");
}

std::string config_error(const Json& j) {
    try {
        parse_simulate_config(j);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing reports every problem at once") {
    Json j = small_config();
    j["grid"]["nxx"] = 3;
    j["phantom"]["planes"] = "one";
    const std::string msg = config_error(j);
    CHECK(msg.find("grid.nxx: unknown key") != std::string::npos);
    CHECK(msg.find("phantom.planes") != std::string::npos);

    Json k = small_config();
    k["phantom"]["kind"] = "teapot";
    CHECK(config_error(k).find("phantom.kind") != std::string::npos);
    CHECK(config_error(small_config()).empty());

    CHECK_THROWS_AS(parse_solver_config(Json{{"lamda_tv", 0.1}}), ConfigError);
    CHECK_THROWS_AS(parse_solver_config(Json{{"tau", 0.0}}), ConfigError);
    const SolverConfig s = parse_solver_config(Json{{"lambda_tv", 0.1}, {"initialization", "normalized_adjoint"}});
    CHECK(s.lambda_tv == 0.1);
    CHECK(s.initialization == Initialization::normalized_adjoint);
    CHECK(parse_solver_config(to_json(s)).lambda_tv == 0.1);
}

TEST_CASE("config survives a json round trip") {
    Json j = small_config();
    j["compression_ratios"] = {4, 8};
    j["noise"]["peak_electrons"] = 1000.0;
    const SimulateConfig a = parse_simulate_config(j);
    const SimulateConfig b = parse_simulate_config(to_json(a));
    CHECK(to_json(a) == to_json(b));
    CHECK(b.noise.peak_electrons.value() == 1000.0);
    CHECK(b.compression_ratios == std::vector<std::size_t>{4, 8});
}

TEST_CASE("noiseless simulation equals encode followed by the forward model") {
    const SimulateConfig cfg = parse_simulate_config(small_config());
    const Simulation sim = simulate(cfg);
    const SpectralGrid g = cfg.grid.spectral();

    PhantomFrame f;
    f.nx = f.ny = 8;
    f.pixel_pitch_um = cfg.grid.pixel_pitch_um;
    f.depth = DepthGrid::from_spectral(g);
    const EncodedCube enc = encode_depth(mirror(f, 1), gaussian_source(g, 20.0, 1.0));
    const SensingOperator op(random_binary_aperture(8, 8, 4, 1, 3), 4);
    CHECK(op.aperture().pattern == sim.aperture.pattern);
    CHECK(sim.raw.image == op.forward(enc.total.data));
    CHECK(*sim.raw.dc_reference == op.forward(enc.dc_reference.data));
    CHECK(sim.truth_ac.data == enc.ac.data);

    const auto dir = testing::scratch("sim_small");
    run_simulate(cfg, dir);
    CHECK(io::read_array2(dir / "measurement") == sim.raw.image);
    const auto [cfg2, sim2] = load_simulation(dir);
    CHECK(to_json(cfg2) == to_json(cfg));
    CHECK(sim2.truth_ac.data == sim.truth_ac.data);
    CHECK(sim2.aperture.pattern == sim.aperture.pattern);
    const Json m = read_json(dir / "manifest.json");
    CHECK(m.at("depth_grid").at("num_planes") == 2);
}

TEST_CASE("compression-ratio sweep writes one directory per ratio") {
    Json j = small_config();
    j["compression_ratios"] = {50, 100, 200, 300, 400};
    const auto dir = testing::scratch("sweep");
    run_simulate(parse_simulate_config(j), dir);
    for (int cr : {50, 100, 200, 300, 400}) {
        const auto sub = dir / ("cr_" + std::to_string(cr));
        const Array2 y = io::read_array2(sub / "measurement");
        CHECK(y.ny() == static_cast<std::size_t>(8 + cr - 1));
        CHECK(io::read_header(sub / "truth_ac").shape[2] == static_cast<std::size_t>(cr));
    }
    CHECK(read_json(dir / "manifest.json").at("runs").size() == 5);
}

TEST_CASE("reconstruct, decode and characterize on a tiny mirror") {
    const auto dir = testing::scratch("chain");
    Json j = small_config();
    j["grid"]["num_channels"] = 8;
    j["phantom"]["planes"] = {2};
    run_simulate(parse_simulate_config(j), dir / "sim");
    SolverConfig s;
    s.max_outer_iters = 20;
    run_reconstruct(dir / "sim", s, dir / "rec");
    const std::string csv = testing::slurp(dir / "rec" / "residuals.csv");
    CHECK(csv.rfind("iteration,relative_residual,objective\n1,", 0) == 0);
    const SpectralCube cube = io::load_spectral_cube(dir / "rec" / "recon");
    CHECK(cube.data.ny() == 8);
    CHECK(cube.data.nz() == 8);

    run_decode(dir / "rec" / "recon", dir / "dec");
    CHECK(io::read_header(dir / "dec" / "volume").shape[2] == 4);
    CHECK(std::filesystem::exists(dir / "dec" / "stack.json"));

    run_characterize({dir / "sim"}, {dir / "rec"}, dir / "ch");
    const std::string metrics = testing::slurp(dir / "ch" / "metrics.csv");
    CHECK(metrics.rfind("run,compression_ratio,metric,value\n", 0) == 0);
    CHECK(metrics.find("psnr_db") != std::string::npos);
    CHECK(metrics.find("axial_fwhm_theory_um") != std::string::npos);
}

TEST_CASE("dataset pairs recompute from the manifest") {
    DatasetConfig cfg;
    cfg.grid = {32, 32, 830.0, 2.5, 8, 6.5};
    cfg.count = 20;
    cfg.validation_fraction = 0.2;
    cfg.noise.enabled = true;
    cfg.noise.photon_scale = 5000;
    cfg.noise.seed = 11;
    const auto dir = testing::scratch("dataset");
    run_dataset(cfg, dir);

    const Json m = read_json(dir / "manifest.json");
    CHECK(m.at("num_train") == 16);
    CHECK(m.at("num_validation") == 4);
    CHECK(m.at("layout") == "y-fastest");
    REQUIRE(m.at("samples").size() == 20);
    const double scale = m.at("scale").get<double>();
    CHECK(scale == doctest::Approx(2.5));

    const CodedAperture ap = io::load_coded_aperture(dir / "mask");
    const SensingOperator op(ap, 8);
    const SpectralGrid g = cfg.grid.spectral();
    PhantomFrame f;
    f.nx = f.ny = 32;
    f.depth = DepthGrid::from_spectral(g);
    for (std::size_t n : {0u, 7u, 19u}) {
        const Json& e = m.at("samples")[n];
        GlyphPose pose;
        pose.offset_x = e.at("pose").at("offset_x_px");
        pose.offset_y = e.at("pose").at("offset_y_px");
        pose.rotation_deg = e.at("pose").at("rotation_deg");
        pose.scale = e.at("pose").at("glyph_scale");
        const auto enc = encode_depth(glyph_layer(f, e.at("text"), pose, e.at("plane")), gaussian_source(g, 20.0));
        const Array3 ac = shear(enc.ac.data, 1);
        const Array2 total = op.apply(shear(enc.total.data, 1));
        NoiseConfig nc;
        nc.seed = 11;
        nc.photon_scale = 5000;
        const Array2 noisy = apply_shot_noise(total, nc, e.at("noise_stream").get<std::uint64_t>());
        Array2 y = op.apply(ac);
        for (std::size_t q = 0; q < y.size(); ++q) y[q] += noisy[q] - total[q];

        const Array2 meas = io::read_array2(dir / e.at("measurement").get<std::string>());
        const Array3 input = io::read_array3(dir / e.at("input").get<std::string>());
        const Array3 target = io::read_array3(dir / e.at("target").get<std::string>());
        CHECK(meas == y);
        const Array3 adj = op.normalized_adjoint(y);
        for (std::size_t q = 0; q < input.size(); ++q) CHECK(input[q] == adj[q] / scale);
        for (std::size_t q = 0; q < target.size(); ++q) {
            CHECK(target[q] == ac[q] / scale);
            CHECK(std::abs(target[q]) < 1.0);
        }
    }
}

TEST_CASE("oracle checks pass and reject bad arguments") {
    for (const auto& c : oracle_checks(6, 7, 5, 3, 15)) {
        CAPTURE(c.name);
        CHECK(c.passed);
    }
    CHECK_THROWS_AS(oracle_checks(0, 7, 5, 3, 15), ConfigError);
}
