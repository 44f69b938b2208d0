#pragma once

#include <cstdint>
#include <optional>

#include "snapcube/interferometer.hpp"
#include "snapcube/types.hpp"

namespace snapcube {

struct NoiseConfig {
    /// Photoelectrons per unit intensity.
    double photon_scale = 30000.0;
    std::uint64_t seed = 0;
    /// Lateral gain map in (0, 1], applied to both interferometer arms.
    std::optional<Array2> illumination_field;
    int oversample_factor = 1;
};

void validate(const NoiseConfig& cfg);

/// Mean at which shot noise switches from exact Poisson sampling to a
/// rounded normal approximation.
inline constexpr double kPoissonNormalCrossover = 1e4;

/// Counter-based generator: a splitmix64 stream keyed by (seed, stream, index).
/// Every pixel gets its own engine, so noise does not depend on visit order.
class PixelEngine {
public:
    using result_type = std::uint64_t;
    PixelEngine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()();

private:
    std::uint64_t state_;
};

/// Each pixel becomes Poisson(photon_scale * y) / photon_scale. `stream`
/// separates independent frames drawn with the same seed.
Array2 apply_shot_noise(const Array2& y, const NoiseConfig& cfg, std::uint64_t stream = 0);

/// Block-mean pooling by the oversample factor on both axes.
Array2 apply_discretization(const Array2& fine, const NoiseConfig& cfg);

/// Multiplies by the illumination field (identity when unset).
Array2 apply_illumination(const Array2& image, const NoiseConfig& cfg);
ReflectivityVolume apply_illumination(const ReflectivityVolume& volume, const NoiseConfig& cfg);
SourceSpectrum apply_illumination(const SourceSpectrum& source, const NoiseConfig& cfg, std::size_t nx,
                                  std::size_t ny);
SpectralCube apply_illumination(const SpectralCube& cube, const NoiseConfig& cfg);

/// Clips electron counts to [0, FWC] and rounds to steps of FWC / 2^bits.
Array2 quantize(const Array2& electrons, const CameraModel& camera);

/// Radially symmetric Gaussian vignette with peak 1 at the image centre and
/// value exp(-r^2 / (2 sigma^2)), sigma given as a fraction of the larger side.
Array2 gaussian_vignette(std::size_t nx, std::size_t ny, double sigma_fraction, double floor = 1e-3);

}  // namespace snapcube
