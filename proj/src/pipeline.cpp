#include "snapcube/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "snapcube/error.hpp"
#include "snapcube/io.hpp"
#include "snapcube/noise.hpp"
#include "snapcube/shear.hpp"

namespace fs = std::filesystem;

namespace snapcube::pipeline {
namespace {

// Reads one JSON object, remembering which keys were consumed so that the
// leftovers can be reported as unknown.
class Reader {
public:
    Reader(const Json* j, std::string path, std::vector<std::string>& errors)
        : j_(j), path_(std::move(path)), errors_(errors) {
        if (j_ && !j_->is_object()) {
            errors_.push_back(path_.empty() ? "<root>: expected an object" : path_ + ": expected an object");
            j_ = nullptr;
        }
    }

    template <typename T>
    void get(const char* key, T& out) {
        seen_.push_back(key);
        if (!j_ || !j_->contains(key)) return;
        try {
            out = (*j_)[key].get<T>();
        } catch (const nlohmann::json::exception&) {
            errors_.push_back(where(key) + ": wrong type");
        }
    }

    template <typename T>
    void get(const char* key, std::optional<T>& out) {
        seen_.push_back(key);
        if (!j_ || !j_->contains(key) || (*j_)[key].is_null()) return;
        try {
            out = (*j_)[key].get<T>();
        } catch (const nlohmann::json::exception&) {
            errors_.push_back(where(key) + ": wrong type");
        }
    }

    Reader child(const char* key) {
        seen_.push_back(key);
        const Json* c = j_ && j_->contains(key) ? &(*j_)[key] : nullptr;
        return Reader(c, where(key), errors_);
    }

    void finish() const {
        if (!j_) return;
        for (const auto& [k, v] : j_->items()) {
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end()) errors_.push_back(where(k) + ": unknown key");
        }
    }

    void fail(const char* key, const std::string& msg) { errors_.push_back(where(key) + ": " + msg); }

private:
    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* j_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::vector<std::string> seen_;
};

void raise(const std::vector<std::string>& errors) {
    if (errors.empty()) return;
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += " [" + e + "]";
    throw ConfigError(msg);
}

void read_grid(Reader r, GridConfig& g) {
    r.get("nx", g.nx);
    r.get("ny", g.ny);
    r.get("center_wavelength_nm", g.center_wavelength_nm);
    r.get("channel_spacing_nm", g.channel_spacing_nm);
    r.get("num_channels", g.num_channels);
    r.get("pixel_pitch_um", g.pixel_pitch_um);
    if (g.nx == 0 || g.ny == 0 || g.num_channels == 0) r.fail("nx", "dims must be >= 1");
    if (!(g.center_wavelength_nm > 0.0)) r.fail("center_wavelength_nm", "must be > 0");
    if (!(g.channel_spacing_nm > 0.0)) r.fail("channel_spacing_nm", "must be > 0");
    r.finish();
}

void read_source(Reader r, double& fwhm, double& ir) {
    r.get("fwhm_bandwidth_nm", fwhm);
    r.get("reference_intensity", ir);
    if (!(fwhm > 0.0)) r.fail("fwhm_bandwidth_nm", "must be > 0");
    if (!(ir > 0.0)) r.fail("reference_intensity", "must be > 0");
    r.finish();
}

void read_mask(Reader r, MaskConfig& m) {
    r.get("seed", m.seed);
    r.get("fill", m.fill);
    r.get("dispersion_step", m.dispersion_step);
    if (!(m.fill > 0.0 && m.fill <= 1.0)) r.fail("fill", "must be in (0, 1]");
    if (m.dispersion_step == 0) r.fail("dispersion_step", "must be nonzero");
    r.finish();
}

void read_noise(Reader r, NoiseSettings& n) {
    r.get("enabled", n.enabled);
    r.get("photon_scale", n.photon_scale);
    r.get("peak_electrons", n.peak_electrons);
    r.get("seed", n.seed);
    r.get("oversample_factor", n.oversample_factor);
    r.get("vignette_sigma_fraction", n.vignette_sigma_fraction);
    r.get("noisy_dc_frames", n.noisy_dc_frames);
    r.get("quantize", n.quantize);
    if (!(n.photon_scale > 0.0)) r.fail("photon_scale", "must be > 0");
    if (n.peak_electrons && !(*n.peak_electrons > 0.0)) r.fail("peak_electrons", "must be > 0");
    if (n.oversample_factor < 1) r.fail("oversample_factor", "must be >= 1");
    if (!(n.vignette_sigma_fraction >= 0.0)) r.fail("vignette_sigma_fraction", "must be >= 0");
    r.finish();
}

Json grid_json(const GridConfig& g) {
    return {{"nx", g.nx},
            {"ny", g.ny},
            {"center_wavelength_nm", g.center_wavelength_nm},
            {"channel_spacing_nm", g.channel_spacing_nm},
            {"num_channels", g.num_channels},
            {"pixel_pitch_um", g.pixel_pitch_um}};
}

Json mask_json(const MaskConfig& m) {
    return {{"seed", m.seed}, {"fill", m.fill}, {"dispersion_step", m.dispersion_step}};
}

Json noise_json(const NoiseSettings& n) {
    Json j{{"enabled", n.enabled},
           {"photon_scale", n.photon_scale},
           {"peak_electrons", nullptr},
           {"seed", n.seed},
           {"oversample_factor", n.oversample_factor},
           {"vignette_sigma_fraction", n.vignette_sigma_fraction},
           {"noisy_dc_frames", n.noisy_dc_frames},
           {"quantize", n.quantize}};
    if (n.peak_electrons) j["peak_electrons"] = *n.peak_electrons;
    return j;
}

BarOrientation orientation_of(const std::string& s) {
    if (s == "vertical") return BarOrientation::vertical;
    if (s == "horizontal") return BarOrientation::horizontal;
    throw ConfigError("invalid config: [phantom.orientation: expected vertical or horizontal]");
}

// Each coarse element becomes an f x f block.
Array2 upsample(const Array2& a, std::size_t f) {
    if (f == 1) return a;
    Array2 out(a.nx() * f, a.ny() * f);
    for (std::size_t i = 0; i < out.nx(); ++i) {
        for (std::size_t j = 0; j < out.ny(); ++j) out(i, j) = a(i / f, j / f);
    }
    return out;
}

Array3 block_mean(const Array3& a, std::size_t f) {
    if (f == 1) return a;
    Array3 out(a.nx() / f, a.ny() / f, a.nz());
    const double inv = 1.0 / static_cast<double>(f * f);
    for (std::size_t k = 0; k < a.nz(); ++k) {
        for (std::size_t i = 0; i < a.nx(); ++i) {
            for (std::size_t j = 0; j < a.ny(); ++j) out(i / f, j / f, k) += a(i, j, k) * inv;
        }
    }
    return out;
}

Array2 plane_of(const Array3& a, std::size_t k) {
    Array2 out(a.nx(), a.ny());
    const auto s = a.slice(k);
    std::copy(s.begin(), s.end(), out.values().begin());
    return out;
}

double max_of(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    return m;
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return io::format_double(v);
}

}  // namespace

// ---- config ---------------------------------------------------------------

SimulateConfig parse_simulate_config(const Json& j) {
    SimulateConfig c;
    std::vector<std::string> errors;
    Reader root(&j, "", errors);
    read_grid(root.child("grid"), c.grid);
    read_source(root.child("source"), c.fwhm_bandwidth_nm, c.reference_intensity);
    {
        Reader r = root.child("phantom");
        auto& p = c.phantom;
        r.get("kind", p.kind);
        r.get("planes", p.planes);
        r.get("reflectivity", p.reflectivity);
        r.get("periods_px", p.periods_px);
        r.get("orientation", p.orientation);
        r.get("margin_px", p.margin_px);
        r.get("text", p.text);
        r.get("offset_x_px", p.pose.offset_x);
        r.get("offset_y_px", p.pose.offset_y);
        r.get("rotation_deg", p.pose.rotation_deg);
        r.get("glyph_scale", p.pose.scale);
        r.get("stagger_px", p.stagger_px);
        r.get("occlusion", p.occlusion);
        static const std::vector<std::string> kinds{"mirror", "layers", "bars", "glyph", "double_layer"};
        if (std::find(kinds.begin(), kinds.end(), p.kind) == kinds.end()) {
            r.fail("kind", "expected mirror, layers, bars, glyph or double_layer");
        }
        if (p.planes.empty()) r.fail("planes", "needs at least one plane");
        if (p.kind == "double_layer" && p.planes.size() != 2) r.fail("planes", "double_layer needs two planes");
        if (p.kind == "layers" && p.reflectivity.size() != p.planes.size()) {
            r.fail("reflectivity", "layers needs one reflectivity per plane");
        }
        if (p.reflectivity.empty()) r.fail("reflectivity", "needs at least one value");
        for (double v : p.reflectivity) {
            if (!(v >= 0.0 && v <= 1.0)) r.fail("reflectivity", "values must be in [0, 1]");
        }
        if (p.orientation != "vertical" && p.orientation != "horizontal") {
            r.fail("orientation", "expected vertical or horizontal");
        }
        if (p.pose.scale < 1) r.fail("glyph_scale", "must be >= 1");
        r.finish();
    }
    read_mask(root.child("mask"), c.mask);
    read_noise(root.child("noise"), c.noise);
    {
        Reader r = root.child("camera");
        r.get("full_well_capacity_e", c.camera.full_well_capacity_e);
        r.get("bit_depth", c.camera.bit_depth);
        r.get("pixel_pitch_um", c.camera.pixel_pitch_um);
        if (!(c.camera.full_well_capacity_e > 0.0)) r.fail("full_well_capacity_e", "must be > 0");
        if (c.camera.bit_depth < 8 || c.camera.bit_depth > 16) r.fail("bit_depth", "must be in 8..16");
        if (!(c.camera.pixel_pitch_um > 0.0)) r.fail("pixel_pitch_um", "must be > 0");
        r.finish();
    }
    root.get("compression_ratios", c.compression_ratios);
    for (std::size_t cr : c.compression_ratios) {
        if (cr == 0) root.fail("compression_ratios", "entries must be >= 1");
    }
    root.finish();
    raise(errors);
    c.camera.oversample_factor = c.noise.oversample_factor;
    return c;
}

Json to_json(const SimulateConfig& c) {
    const auto& p = c.phantom;
    return {{"grid", grid_json(c.grid)},
            {"source", {{"fwhm_bandwidth_nm", c.fwhm_bandwidth_nm}, {"reference_intensity", c.reference_intensity}}},
            {"phantom",
             {{"kind", p.kind},
              {"planes", p.planes},
              {"reflectivity", p.reflectivity},
              {"periods_px", p.periods_px},
              {"orientation", p.orientation},
              {"margin_px", p.margin_px},
              {"text", p.text},
              {"offset_x_px", p.pose.offset_x},
              {"offset_y_px", p.pose.offset_y},
              {"rotation_deg", p.pose.rotation_deg},
              {"glyph_scale", p.pose.scale},
              {"stagger_px", p.stagger_px},
              {"occlusion", p.occlusion}}},
            {"mask", mask_json(c.mask)},
            {"noise", noise_json(c.noise)},
            {"camera",
             {{"full_well_capacity_e", c.camera.full_well_capacity_e},
              {"bit_depth", c.camera.bit_depth},
              {"pixel_pitch_um", c.camera.pixel_pitch_um}}},
            {"compression_ratios", c.compression_ratios}};
}

SolverConfig parse_solver_config(const Json& j) {
    SolverConfig c;
    std::vector<std::string> errors;
    Reader r(&j, "", errors);
    r.get("lambda_tv", c.lambda_tv);
    r.get("rho_wavelet", c.rho_wavelet);
    r.get("tau", c.tau);
    r.get("eta", c.eta);
    r.get("soft_threshold", c.soft_threshold);
    r.get("max_outer_iters", c.max_outer_iters);
    r.get("tv_inner_iters", c.tv_inner_iters);
    r.get("wavelet_levels", c.wavelet_levels);
    r.get("tolerance", c.tolerance);
    std::string init = "zero";
    r.get("initialization", init);
    if (init == "zero") {
        c.initialization = Initialization::zero;
    } else if (init == "normalized_adjoint") {
        c.initialization = Initialization::normalized_adjoint;
    } else {
        r.fail("initialization", "expected zero or normalized_adjoint");
    }
    r.finish();
    raise(errors);
    validate(c);
    return c;
}

Json to_json(const SolverConfig& c) {
    Json j{{"lambda_tv", c.lambda_tv},
           {"rho_wavelet", c.rho_wavelet},
           {"tau", c.tau},
           {"eta", c.eta},
           {"soft_threshold", c.threshold()},
           {"max_outer_iters", c.max_outer_iters},
           {"tv_inner_iters", c.tv_inner_iters},
           {"wavelet_levels", c.wavelet_levels},
           {"tolerance", c.tolerance},
           {"initialization", c.initialization == Initialization::zero ? "zero" : "normalized_adjoint"}};
    return j;
}

DatasetConfig parse_dataset_config(const Json& j) {
    DatasetConfig c;
    std::vector<std::string> errors;
    Reader root(&j, "", errors);
    read_grid(root.child("grid"), c.grid);
    read_source(root.child("source"), c.fwhm_bandwidth_nm, c.reference_intensity);
    read_mask(root.child("mask"), c.mask);
    read_noise(root.child("noise"), c.noise);
    root.get("count", c.count);
    root.get("validation_fraction", c.validation_fraction);
    root.get("seed", c.seed);
    if (c.count == 0) root.fail("count", "must be >= 1");
    if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0)) {
        root.fail("validation_fraction", "must be in [0, 1)");
    }
    if (c.noise.peak_electrons) root.fail("noise.peak_electrons", "not supported for datasets; use photon_scale");
    if (c.noise.oversample_factor != 1) root.fail("noise.oversample_factor", "datasets use oversample_factor 1");
    root.finish();
    raise(errors);
    return c;
}

Json to_json(const DatasetConfig& c) {
    return {{"grid", grid_json(c.grid)},
            {"source", {{"fwhm_bandwidth_nm", c.fwhm_bandwidth_nm}, {"reference_intensity", c.reference_intensity}}},
            {"mask", mask_json(c.mask)},
            {"noise", noise_json(c.noise)},
            {"count", c.count},
            {"validation_fraction", c.validation_fraction},
            {"seed", c.seed}};
}

Json read_json(const fs::path& path) {
    const std::string text = io::read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

std::vector<SimulateConfig> expand_sweep(const SimulateConfig& cfg) {
    if (cfg.compression_ratios.empty()) return {cfg};
    std::vector<SimulateConfig> out;
    for (std::size_t cr : cfg.compression_ratios) {
        SimulateConfig c = cfg;
        c.grid.num_channels = cr;
        c.compression_ratios.clear();
        out.push_back(c);
    }
    return out;
}

// ---- phantoms ---------------------------------------------------------------

PhantomFrame phantom_frame(const SimulateConfig& cfg, int oversample) {
    const auto f = static_cast<std::size_t>(oversample);
    PhantomFrame frame;
    frame.nx = cfg.grid.nx * f;
    frame.ny = cfg.grid.ny * f;
    frame.pixel_pitch_um = cfg.grid.pixel_pitch_um / static_cast<double>(f);
    frame.depth = DepthGrid::from_spectral(cfg.grid.spectral());
    return frame;
}

std::vector<BarGroup> phantom_bar_groups(const SimulateConfig& cfg, int oversample) {
    const auto f = static_cast<std::size_t>(oversample);
    std::vector<std::size_t> periods;
    for (std::size_t p : cfg.phantom.periods_px) periods.push_back(p * f);
    return layout_bar_groups(phantom_frame(cfg, oversample), periods, orientation_of(cfg.phantom.orientation),
                             cfg.phantom.margin_px * f);
}

ReflectivityVolume build_phantom(const SimulateConfig& cfg, int oversample) {
    const PhantomFrame frame = phantom_frame(cfg, oversample);
    const auto& p = cfg.phantom;
    GlyphPose pose = p.pose;
    pose.offset_x *= oversample;
    pose.offset_y *= oversample;
    pose.scale *= oversample;
    const double value = p.reflectivity.front();
    auto scaled = [&](ReflectivityVolume v) {
        for (double& s : v.data.values()) s *= value;
        return v;
    };
    if (p.kind == "mirror") return mirror(frame, p.planes.front(), value);
    if (p.kind == "layers") {
        ReflectivityVolume v = mirror(frame, p.planes.front(), 0.0);
        for (std::size_t n = 0; n < p.planes.size(); ++n) {
            const ReflectivityVolume layer = mirror(frame, p.planes[n], p.reflectivity[n]);
            for (std::size_t m = 0; m < v.data.size(); ++m) v.data[m] = std::min(1.0, v.data[m] + layer.data[m]);
        }
        return v;
    }
    if (p.kind == "bars") return scaled(bar_groups(frame, phantom_bar_groups(cfg, oversample), p.planes.front()));
    if (p.kind == "glyph") return scaled(glyph_layer(frame, p.text, pose, p.planes.front()));
    const Array2 pattern = glyph_raster(frame.nx, frame.ny, p.text, pose);
    return scaled(double_layer_target(frame, pattern, p.planes[0], p.planes[1], p.stagger_px * oversample,
                                      p.occlusion));
}

// ---- simulate ---------------------------------------------------------------

Simulation simulate(const SimulateConfig& cfg) {
    const int f = cfg.noise.oversample_factor;
    const auto fu = static_cast<std::size_t>(f);
    const SpectralGrid grid = cfg.grid.spectral();
    const std::size_t nl = grid.num_channels;

    NoiseConfig noise;
    noise.seed = cfg.noise.seed;
    noise.oversample_factor = f;
    if (cfg.noise.vignette_sigma_fraction > 0.0) {
        noise.illumination_field =
            gaussian_vignette(cfg.grid.nx * fu, cfg.grid.ny * fu, cfg.noise.vignette_sigma_fraction);
    }

    const ReflectivityVolume fine = apply_illumination(build_phantom(cfg, f), noise);
    SourceSpectrum source = gaussian_source(grid, cfg.fwhm_bandwidth_nm, cfg.reference_intensity);
    source = apply_illumination(source, noise, fine.data.nx(), fine.data.ny());
    const EncodedCube enc = encode_depth(fine, source);

    Simulation sim;
    sim.aperture = random_binary_aperture(cfg.grid.nx, cfg.grid.ny, nl, cfg.mask.dispersion_step, cfg.mask.seed,
                                          cfg.mask.fill);
    CodedAperture fine_aperture;
    fine_aperture.pattern = upsample(sim.aperture.pattern, fu);
    fine_aperture.dispersion_step = cfg.mask.dispersion_step * f;
    const SensingOperator op(fine_aperture, nl);

    NoiseConfig bin = noise;
    bin.illumination_field.reset();
    Array2 total = apply_discretization(op.forward(enc.total.data), bin);
    Array2 dc_ref = apply_discretization(op.forward(enc.dc_reference.data), bin);
    Array2 dc_smp = apply_discretization(op.forward(enc.dc_sample.data), bin);

    sim.photon_scale = cfg.noise.photon_scale;
    if (cfg.noise.peak_electrons) {
        const double peak = max_of(total.values());
        if (!(peak > 0.0)) throw NumericalError("peak_electrons: the measurement is dark");
        sim.photon_scale = *cfg.noise.peak_electrons / peak;
    }
    if (cfg.noise.enabled) {
        NoiseConfig shot = bin;
        shot.photon_scale = sim.photon_scale;
        auto capture = [&](const Array2& frame, std::uint64_t stream) {
            Array2 y = apply_shot_noise(frame, shot, stream);
            if (!cfg.noise.quantize) return y;
            for (double& v : y.values()) v *= sim.photon_scale;
            y = quantize(y, cfg.camera);
            for (double& v : y.values()) v /= sim.photon_scale;
            return y;
        };
        total = capture(total, 0);
        if (cfg.noise.noisy_dc_frames) {
            dc_ref = capture(dc_ref, 1);
            dc_smp = capture(dc_smp, 2);
        }
    }

    sim.raw.image = std::move(total);
    sim.raw.dc_reference = std::move(dc_ref);
    sim.raw.dc_sample = std::move(dc_smp);
    sim.raw.camera = cfg.camera;
    sim.raw.camera.oversample_factor = f;

    sim.volume.data = block_mean(fine.data, fu);
    sim.volume.pixel_pitch_um = cfg.grid.pixel_pitch_um;
    sim.volume.depth = fine.depth;
    sim.truth_ac = enc.ac;
    sim.truth_ac.data = block_mean(enc.ac.data, fu);
    return sim;
}

void write_simulation(const fs::path& dir, const SimulateConfig& cfg, const Simulation& sim) {
    fs::create_directories(dir);
    io::save(dir / "measurement", sim.raw);
    io::save(dir / "truth_ac", sim.truth_ac);
    io::save(dir / "truth_volume", sim.volume);
    io::save(dir / "mask", sim.aperture);
    const DepthGrid depth = DepthGrid::from_spectral(cfg.grid.spectral());
    Json manifest{{"command", "simulate"},
                  {"config", to_json(cfg)},
                  {"photon_scale_used", sim.photon_scale},
                  {"compression_ratio", cfg.grid.num_channels},
                  {"depth_grid",
                   {{"num_planes", depth.num_planes},
                    {"plane_spacing_um", depth.plane_spacing_um},
                    {"origin_um", depth.origin_um}}},
                  {"files",
                   {{"measurement", "measurement"},
                    {"dc_reference", "measurement_dc_reference"},
                    {"dc_sample", "measurement_dc_sample"},
                    {"truth_ac", "truth_ac"},
                    {"truth_volume", "truth_volume"},
                    {"mask", "mask"}}}};
    write_json(dir / "manifest.json", manifest);
}

std::pair<SimulateConfig, Simulation> load_simulation(const fs::path& dir) {
    const Json manifest = read_json(dir / "manifest.json");
    if (!manifest.contains("config")) throw IoError((dir / "manifest.json").string() + ": no config section");
    std::pair<SimulateConfig, Simulation> out;
    out.first = parse_simulate_config(manifest["config"]);
    auto& sim = out.second;
    sim.raw = io::load_measurement(dir / "measurement");
    sim.truth_ac = io::load_spectral_cube(dir / "truth_ac");
    sim.volume = io::load_reflectivity_volume(dir / "truth_volume");
    sim.aperture = io::load_coded_aperture(dir / "mask");
    sim.photon_scale = manifest.value("photon_scale_used", 0.0);
    return out;
}

void run_simulate(const SimulateConfig& cfg, const fs::path& out) {
    const auto cases = expand_sweep(cfg);
    if (cfg.compression_ratios.empty()) {
        write_simulation(out, cfg, simulate(cfg));
        return;
    }
    Json runs = Json::array();
    for (const auto& c : cases) {
        const std::string name = "cr_" + std::to_string(c.grid.num_channels);
        write_simulation(out / name, c, simulate(c));
        runs.push_back({{"compression_ratio", c.grid.num_channels}, {"dir", name}});
    }
    write_json(out / "manifest.json", Json{{"command", "simulate"}, {"config", to_json(cfg)}, {"runs", runs}});
}

// ---- reconstruct --------------------------------------------------------------

SpectralCube adjoint_baseline(const Measurement& raw, const CodedAperture& aperture, const SpectralGrid& grid) {
    const SensingOperator op(aperture, grid.num_channels);
    SpectralCube cube;
    cube.grid = grid;
    cube.kind = CubeKind::ac_only;
    cube.data = unshear(op.normalized_adjoint(subtract_dc(raw).image), aperture.dispersion_step);
    return cube;
}

Reconstruction reconstruct(const Measurement& raw, const CodedAperture& aperture, const SpectralGrid& grid,
                           const SolverConfig& cfg) {
    const SensingOperator op(aperture, grid.num_channels);
    Reconstruction r;
    r.result = solve(subtract_dc(raw).image, op, cfg);
    r.cube.grid = grid;
    r.cube.kind = CubeKind::ac_only;
    r.cube.data = unshear(r.result.sheared, aperture.dispersion_step);
    return r;
}

void run_reconstruct(const fs::path& sim_dir, const SolverConfig& cfg, const fs::path& out) {
    const auto [sim_cfg, sim] = load_simulation(sim_dir);
    const Reconstruction r = reconstruct(sim.raw, sim.aperture, sim_cfg.grid.spectral(), cfg);
    fs::create_directories(out);
    io::save(out / "recon", r.cube);
    io::write_array(out / "recon_sheared", r.result.sheared,
                    {{"type", "SpectralCube"}, {"axes", "x y_sheared lambda"}, {"kind", "ac_only"}});
    io::write_text(out / "residuals.csv", residual_csv(r.result.state));
    const auto& h = r.result.state.residual_history;
    write_json(out / "manifest.json", Json{{"command", "reconstruct"},
                                           {"solver", to_json(cfg)},
                                           {"grid", grid_json(sim_cfg.grid)},
                                           {"iterations", r.result.state.iteration},
                                           {"converged", r.result.converged},
                                           {"final_relative_residual", h.empty() ? 0.0 : h.back()},
                                           {"files", {{"cube", "recon"}, {"sheared", "recon_sheared"},
                                                      {"residuals", "residuals.csv"}}}});
}

// ---- decode ---------------------------------------------------------------------

void write_depth_stack(const fs::path& out, const DepthVolume& volume) {
    fs::create_directories(out);
    const auto& a = volume.amplitude;
    double hi = max_of(a.values());
    if (!(hi > 0.0)) hi = 1.0;
    Json planes = Json::array();
    for (std::size_t k = 0; k < a.nz(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "plane_%04zu.pgm", k);
        io::write_pgm16(out / name, plane_of(a, k), 0.0, hi);
        planes.push_back({{"index", k}, {"file", name}, {"z_um", volume.depth.z_um(k)}});
    }
    io::write_array(out / "volume", a,
                    {{"type", "DepthVolume"},
                     {"axes", "x y z"},
                     {"num_planes", std::to_string(volume.depth.num_planes)},
                     {"plane_spacing_um", io::format_double(volume.depth.plane_spacing_um)},
                     {"origin_um", io::format_double(volume.depth.origin_um)}});
    write_json(out / "stack.json", Json{{"command", "decode"},
                                        {"planes", planes},
                                        {"gray_min", 0.0},
                                        {"gray_max", hi},
                                        {"gray_levels", 65535},
                                        {"amplitude_units", "decoded magnitude per gray level = gray_max/65535"},
                                        {"plane_spacing_um", volume.depth.plane_spacing_um},
                                        {"volume", "volume"}});
}

void run_decode(const fs::path& cube_stem, const fs::path& out) {
    write_depth_stack(out, decode_depth(io::load_spectral_cube(cube_stem)));
}

// ---- characterize ---------------------------------------------------------------

std::vector<MetricRow> characterize(const std::string& run, const SimulateConfig& cfg, const Simulation& truth,
                                    const SpectralCube& recon) {
    std::vector<MetricRow> rows;
    const std::size_t cr = cfg.grid.num_channels;
    auto add = [&](const std::string& metric, double v) { rows.push_back({run, cr, metric, v}); };

    add("psnr_db", psnr(recon.data, truth.truth_ac.data));
    add("rmse", rmse(recon.data, truth.truth_ac.data));
    const SpectralCube base = adjoint_baseline(truth.raw, truth.aperture, cfg.grid.spectral());
    add("baseline_psnr_db", psnr(base.data, truth.truth_ac.data));

    const DepthVolume vol = decode_depth(recon);
    const auto profile = axial_profile(vol);
    const auto peak = static_cast<std::size_t>(std::max_element(profile.begin(), profile.end()) - profile.begin());
    add("peak_plane", static_cast<double>(peak));

    const auto& p = cfg.phantom;
    if (p.kind == "mirror" || p.kind == "layers") {
        double fwhm = std::numeric_limits<double>::quiet_NaN();
        try {
            fwhm = axial_psf_fwhm_um(vol);
        } catch (const NumericalError&) {
        }
        add("axial_fwhm_um", fwhm);
        add("axial_fwhm_theory_um", axial_resolution_um(cfg.grid.center_wavelength_nm, cfg.fwhm_bandwidth_nm));
        double sens = std::numeric_limits<double>::quiet_NaN();
        try {
            sens = sensitivity_db(vol);
        } catch (const NumericalError&) {
        }
        add("sensitivity_db", sens);
    }
    if (p.kind == "bars") {
        const Array2 plane = plane_of(vol.amplitude, p.planes.front());
        const LateralResolution lr = lateral_resolution(plane, phantom_bar_groups(cfg));
        add("finest_period_px", lr.finest_period_px ? static_cast<double>(*lr.finest_period_px)
                                                    : std::numeric_limits<double>::quiet_NaN());
        for (const auto& g : lr.groups) add("dip_period_" + std::to_string(g.period_px) + "px", g.dip);
    }
    return rows;
}

void run_characterize(const std::vector<fs::path>& sim_dirs, const std::vector<fs::path>& recon_dirs,
                      const fs::path& out) {
    if (sim_dirs.size() != recon_dirs.size() || sim_dirs.empty()) {
        throw ConfigError("characterize needs one reconstruction directory per simulation directory");
    }
    fs::create_directories(out);
    std::ostringstream csv;
    csv << "run,compression_ratio,metric,value\n";
    for (std::size_t n = 0; n < sim_dirs.size(); ++n) {
        const auto [cfg, sim] = load_simulation(sim_dirs[n]);
        const SpectralCube recon = io::load_spectral_cube(recon_dirs[n] / "recon");
        const std::string run = "run" + std::to_string(n);
        for (const auto& r : characterize(run, cfg, sim, recon)) {
            csv << r.run << ',' << r.cr << ',' << r.metric << ',' << format_value(r.value) << '\n';
        }

        const DepthVolume vol = decode_depth(recon);
        const auto profile = axial_profile(vol);
        std::ostringstream ax;
        ax << "plane,z_um,mean_amplitude\n";
        for (std::size_t k = 0; k < profile.size(); ++k) {
            ax << k << ',' << io::format_double(vol.depth.z_um(k)) << ',' << io::format_double(profile[k]) << '\n';
        }
        io::write_text(out / (run + "_axial_profile.csv"), ax.str());

        if (cfg.phantom.kind == "bars") {
            const Array2 plane = plane_of(vol.amplitude, cfg.phantom.planes.front());
            std::ostringstream bars;
            bars << "period_px,position_px,mean_amplitude\n";
            for (const auto& g : phantom_bar_groups(cfg)) {
                const auto prof = bar_profile(plane, g);
                for (std::size_t q = 0; q < prof.size(); ++q) {
                    bars << g.period_px << ',' << q << ',' << io::format_double(prof[q]) << '\n';
                }
            }
            io::write_text(out / (run + "_bar_profiles.csv"), bars.str());
        }
    }
    io::write_text(out / "metrics.csv", csv.str());
}

// ---- oracle -------------------------------------------------------------------------

namespace {

std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::uint64_t>::max();
    auto ordered = [](double v) {
        const auto bits = std::bit_cast<std::int64_t>(v);
        return bits < 0 ? std::numeric_limits<std::int64_t>::min() - bits : bits;
    };
    const std::int64_t x = ordered(a), y = ordered(b);
    return x > y ? static_cast<std::uint64_t>(x) - static_cast<std::uint64_t>(y)
                 : static_cast<std::uint64_t>(y) - static_cast<std::uint64_t>(x);
}

}  // namespace

std::vector<OracleCheck> oracle_checks(std::size_t nx, std::size_t ny, std::size_t nl, std::uint64_t seed,
                                       std::size_t instances) {
    if (nx == 0 || ny == 0 || nl == 0) throw ConfigError("oracle dims must be >= 1");
    if (instances == 0) throw ConfigError("oracle needs at least one instance");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;

    OracleCheck adj{"adjoint_identity", true, 0.0, ""};
    for (std::size_t n = 0; n < instances; ++n) {
        const SensingOperator op(random_binary_aperture(nx, ny, nl, 1, rng()), nl);
        Array3 x(nx, op.measurement_width(), nl);
        for (double& v : x.values()) v = normal(rng);
        Array2 y(nx, op.measurement_width());
        for (double& v : y.values()) v = normal(rng);
        const Array2 ax = op.apply(x);
        const Array3 aty = op.apply_adjoint(y);
        double lhs = 0.0, rhs = 0.0;
        for (std::size_t m = 0; m < y.size(); ++m) lhs += ax[m] * y[m];
        for (std::size_t m = 0; m < x.size(); ++m) rhs += x[m] * aty[m];
        const double rel = std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
        adj.worst = std::max(adj.worst, rel);
    }
    adj.passed = adj.worst <= 1e-12;
    adj.detail = std::to_string(instances) + " instances, relative error";

    std::vector<OracleCheck> out{adj};
    if (nx * ny * nl > 10000) {
        out.push_back({"dense_oracle", true, 0.0, "skipped: more than 1e4 elements"});
        return out;
    }
    const SensingOperator op(random_binary_aperture(nx, ny, nl, 1, rng()), nl);
    const DenseMatrix a = dense_oracle(op);
    Array3 x(nx, op.measurement_width(), nl);
    for (double& v : x.values()) v = normal(rng);
    Array2 y(nx, op.measurement_width());
    for (double& v : y.values()) v = normal(rng);

    OracleCheck fwd{"forward_vs_dense", true, 0.0, "ulp"};
    const Array2 ax = op.apply(x);
    const auto dx = a.multiply(std::vector<double>(x.values().begin(), x.values().end()));
    for (std::size_t m = 0; m < dx.size(); ++m) {
        fwd.worst = std::max(fwd.worst, static_cast<double>(ulp_distance(ax[m], dx[m])));
    }
    fwd.passed = fwd.worst <= 4.0;

    OracleCheck bwd{"adjoint_vs_dense", true, 0.0, "ulp"};
    const Array3 aty = op.apply_adjoint(y);
    const auto dty = a.multiply_transpose(std::vector<double>(y.values().begin(), y.values().end()));
    for (std::size_t m = 0; m < dty.size(); ++m) {
        bwd.worst = std::max(bwd.worst, static_cast<double>(ulp_distance(aty[m], dty[m])));
    }
    bwd.passed = bwd.worst <= 4.0;

    OracleCheck psi{"psi_vs_dense_diagonal", true, 0.0, "absolute difference"};
    for (std::size_t r = 0; r < a.rows; ++r) {
        double d = 0.0;
        for (std::size_t c = 0; c < a.cols; ++c) d += a(r, c) * a(r, c);
        psi.worst = std::max(psi.worst, std::abs(d - op.psi()[r]));
    }
    psi.passed = psi.worst == 0.0;

    out.push_back(fwd);
    out.push_back(bwd);
    out.push_back(psi);
    return out;
}

// ---- dataset ----------------------------------------------------------------------

double dataset_scale(const DatasetConfig& cfg) {
    // |AC| <= 2 sqrt(I_r I_s) for one layer with I_s <= 1; keep a margin below 1.
    return 1.25 * 2.0 * std::sqrt(cfg.reference_intensity);
}

DatasetPair make_dataset_pair(const DatasetConfig& cfg, const SensingOperator& op, const GlyphSample& sample,
                              std::uint64_t stream) {
    PhantomFrame frame;
    frame.nx = cfg.grid.nx;
    frame.ny = cfg.grid.ny;
    frame.pixel_pitch_um = cfg.grid.pixel_pitch_um;
    frame.depth = DepthGrid::from_spectral(cfg.grid.spectral());
    const ReflectivityVolume vol = glyph_layer(frame, sample.text, sample.pose, sample.plane);
    const EncodedCube enc =
        encode_depth(vol, gaussian_source(cfg.grid.spectral(), cfg.fwhm_bandwidth_nm, cfg.reference_intensity));
    const int step = op.aperture().dispersion_step;
    const double scale = dataset_scale(cfg);

    DatasetPair pair;
    pair.sample = sample;
    const Array3 truth = shear(enc.ac.data, step);
    pair.measurement = op.apply(truth);
    if (cfg.noise.enabled) {
        NoiseConfig nc;
        nc.seed = cfg.noise.seed;
        nc.photon_scale = cfg.noise.photon_scale;
        const Array2 total = op.apply(shear(enc.total.data, step));
        const Array2 noisy = apply_shot_noise(total, nc, stream);
        for (std::size_t n = 0; n < total.size(); ++n) pair.measurement[n] += noisy[n] - total[n];
    }
    pair.input = op.normalized_adjoint(pair.measurement);
    for (double& v : pair.input.values()) v /= scale;
    pair.target = truth;
    for (double& v : pair.target.values()) v /= scale;
    return pair;
}

void run_dataset(const DatasetConfig& cfg, const fs::path& out) {
    const std::size_t nl = cfg.grid.num_channels;
    PhantomFrame frame;
    frame.nx = cfg.grid.nx;
    frame.ny = cfg.grid.ny;
    frame.pixel_pitch_um = cfg.grid.pixel_pitch_um;
    frame.depth = DepthGrid::from_spectral(cfg.grid.spectral());
    const auto samples = glyph_dataset(frame, cfg.count, cfg.validation_fraction, cfg.seed);
    const CodedAperture aperture =
        random_binary_aperture(cfg.grid.nx, cfg.grid.ny, nl, cfg.mask.dispersion_step, cfg.mask.seed, cfg.mask.fill);
    const SensingOperator op(aperture, nl);

    fs::create_directories(out / "samples");
    io::save(out / "mask", aperture);
    const io::Attributes cube_attrs{{"type", "SpectralCube"}, {"axes", "x y_sheared lambda"}, {"kind", "ac_only"}};
    Json entries = Json::array();
    for (std::size_t n = 0; n < samples.size(); ++n) {
        const DatasetPair pair = make_dataset_pair(cfg, op, samples[n], n);
        const std::string id = samples[n].id;
        io::write_array(out / "samples" / (id + "_input"), pair.input, cube_attrs);
        io::write_array(out / "samples" / (id + "_target"), pair.target, cube_attrs);
        io::write_array(out / "samples" / (id + "_measurement"), pair.measurement, {{"type", "Measurement"}});
        const auto& s = samples[n];
        entries.push_back({{"id", id},
                           {"text", s.text},
                           {"pose",
                            {{"offset_x_px", s.pose.offset_x},
                             {"offset_y_px", s.pose.offset_y},
                             {"rotation_deg", s.pose.rotation_deg},
                             {"glyph_scale", s.pose.scale}}},
                           {"plane", s.plane},
                           {"split", s.split},
                           {"noise_stream", n},
                           {"input", "samples/" + id + "_input"},
                           {"target", "samples/" + id + "_target"},
                           {"measurement", "samples/" + id + "_measurement"}});
    }
    std::size_t n_val = 0;
    for (const auto& s : samples) n_val += s.split == "validation";
    write_json(out / "manifest.json",
               Json{{"command", "dataset"},
                    {"config", to_json(cfg)},
                    {"scale", dataset_scale(cfg)},
                    {"input_definition", "psi-normalized adjoint of measurement, divided by scale"},
                    {"target_definition", "sheared AC spectral cube, divided by scale"},
                    {"layout", "y-fastest"},
                    {"container_format", "snapcube-container-1"},
                    {"mask", "mask"},
                    {"num_train", samples.size() - n_val},
                    {"num_validation", n_val},
                    {"samples", entries}});
}

}  // namespace snapcube::pipeline
