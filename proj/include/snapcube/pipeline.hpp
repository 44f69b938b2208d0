#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "snapcube/admm.hpp"
#include "snapcube/interferometer.hpp"
#include "snapcube/metrics.hpp"
#include "snapcube/phantoms.hpp"
#include "snapcube/sensing.hpp"

namespace snapcube::pipeline {

using Json = nlohmann::json;

// Run configuration. Every physical unit is part of the key name.

struct GridConfig {
    std::size_t nx = 64;
    std::size_t ny = 64;
    double center_wavelength_nm = 830.0;
    double channel_spacing_nm = 2.5;
    std::size_t num_channels = 16;
    double pixel_pitch_um = 6.5;
    SpectralGrid spectral() const { return {center_wavelength_nm, channel_spacing_nm, num_channels}; }
};

struct PhantomConfig {
    std::string kind = "mirror";  // mirror | layers | bars | glyph | double_layer
    std::vector<std::size_t> planes{1};
    std::vector<double> reflectivity{1.0};
    std::vector<std::size_t> periods_px{2, 4, 6, 8};
    std::string orientation = "vertical";
    std::size_t margin_px = 2;
    std::string text = "A";
    GlyphPose pose;
    long stagger_px = 0;
    bool occlusion = true;
};

struct MaskConfig {
    std::uint64_t seed = 1;
    double fill = 0.5;
    int dispersion_step = 1;
};

struct NoiseSettings {
    bool enabled = false;
    double photon_scale = 30000.0;
    std::optional<double> peak_electrons;  // overrides photon_scale: brightest raw pixel gets this mean
    std::uint64_t seed = 0;
    int oversample_factor = 1;
    double vignette_sigma_fraction = 0.0;  // 0 disables
    bool noisy_dc_frames = false;
    bool quantize = true;
};

struct SimulateConfig {
    GridConfig grid;
    double fwhm_bandwidth_nm = 20.0;
    double reference_intensity = 1.0;
    PhantomConfig phantom;
    MaskConfig mask;
    NoiseSettings noise;
    CameraModel camera;
    std::vector<std::size_t> compression_ratios;  // sweep over num_channels when non-empty
};

/// Parses a config object. Unknown keys and type errors are collected and
/// reported together in one ConfigError.
SimulateConfig parse_simulate_config(const Json& j);
Json to_json(const SimulateConfig& cfg);
SolverConfig parse_solver_config(const Json& j);
Json to_json(const SolverConfig& cfg);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// One config per sweep entry (the config itself when no sweep is set).
std::vector<SimulateConfig> expand_sweep(const SimulateConfig& cfg);

PhantomFrame phantom_frame(const SimulateConfig& cfg, int oversample = 1);
ReflectivityVolume build_phantom(const SimulateConfig& cfg, int oversample = 1);
/// Bar groups of a bars phantom in camera-pixel coordinates.
std::vector<BarGroup> phantom_bar_groups(const SimulateConfig& cfg, int oversample = 1);

struct Simulation {
    ReflectivityVolume volume;  // camera resolution
    SpectralCube truth_ac;      // camera resolution, object frame
    CodedAperture aperture;
    Measurement raw;            // total frame plus the two DC frames
    double photon_scale = 0.0;  // electrons per unit intensity actually used
};

Simulation simulate(const SimulateConfig& cfg);
void write_simulation(const std::filesystem::path& dir, const SimulateConfig& cfg, const Simulation& sim);
/// Reads back what write_simulation wrote (config from the manifest).
std::pair<SimulateConfig, Simulation> load_simulation(const std::filesystem::path& dir);
/// Runs every sweep entry; a sweep writes one `cr_<n>` subdirectory per entry.
void run_simulate(const SimulateConfig& cfg, const std::filesystem::path& out);

struct Reconstruction {
    SpectralCube cube;  // unsheared
    SolveResult result;
};

Reconstruction reconstruct(const Measurement& raw, const CodedAperture& aperture, const SpectralGrid& grid,
                           const SolverConfig& cfg);
/// Unsheared, psi-normalised adjoint of the DC-subtracted measurement.
SpectralCube adjoint_baseline(const Measurement& raw, const CodedAperture& aperture, const SpectralGrid& grid);
void run_reconstruct(const std::filesystem::path& sim_dir, const SolverConfig& cfg, const std::filesystem::path& out);

void write_depth_stack(const std::filesystem::path& out, const DepthVolume& volume);
void run_decode(const std::filesystem::path& cube_stem, const std::filesystem::path& out);

struct MetricRow {
    std::string run;
    std::size_t cr = 0;
    std::string metric;
    double value = 0.0;
};

/// Metrics of one reconstruction against its simulation.
std::vector<MetricRow> characterize(const std::string& run, const SimulateConfig& cfg, const Simulation& truth,
                                    const SpectralCube& recon);
void run_characterize(const std::vector<std::filesystem::path>& sim_dirs,
                      const std::vector<std::filesystem::path>& recon_dirs, const std::filesystem::path& out);

struct OracleCheck {
    std::string name;
    bool passed = false;
    double worst = 0.0;  // worst error seen
    std::string detail;
};

/// Adjoint identity over `instances` random draws, implicit vs dense
/// forward/adjoint, and psi vs diag(A A^T) at the given dims.
std::vector<OracleCheck> oracle_checks(std::size_t nx, std::size_t ny, std::size_t nl, std::uint64_t seed,
                                       std::size_t instances);

struct DatasetConfig {
    GridConfig grid{64, 64, 830.0, 2.5, 16, 6.5};
    double fwhm_bandwidth_nm = 20.0;
    double reference_intensity = 1.0;
    MaskConfig mask;
    NoiseSettings noise;
    std::size_t count = 2200;
    double validation_fraction = 200.0 / 2200.0;
    std::uint64_t seed = 7;
};

DatasetConfig parse_dataset_config(const Json& j);
Json to_json(const DatasetConfig& cfg);

struct DatasetPair {
    GlyphSample sample;
    Array3 input;        // psi-normalised adjoint of the AC measurement, divided by the scale
    Array3 target;       // sheared AC truth, divided by the scale
    Array2 measurement;  // noisy AC measurement
};

/// Scale that maps every target into (-1, 1).
double dataset_scale(const DatasetConfig& cfg);
DatasetPair make_dataset_pair(const DatasetConfig& cfg, const SensingOperator& op, const GlyphSample& sample,
                              std::uint64_t stream);
void run_dataset(const DatasetConfig& cfg, const std::filesystem::path& out);

}  // namespace snapcube::pipeline
