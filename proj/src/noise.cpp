#include "snapcube/noise.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "snapcube/error.hpp"
#include "snapcube/parallel.hpp"

namespace snapcube {
namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_field(const NoiseConfig& cfg, std::size_t nx, std::size_t ny) {
    if (cfg.illumination_field && (cfg.illumination_field->nx() != nx || cfg.illumination_field->ny() != ny)) {
        throw ValidationError("dimension-mismatch", "illumination field shape differs from the data");
    }
}

}  // namespace

PixelEngine::PixelEngine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    : state_(splitmix(seed ^ splitmix(splitmix(stream) ^ index))) {}

PixelEngine::result_type PixelEngine::operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void validate(const NoiseConfig& cfg) {
    if (!(cfg.photon_scale > 0.0) || !std::isfinite(cfg.photon_scale)) {
        throw ValidationError("photon-scale", "photon scale must be positive");
    }
    if (cfg.oversample_factor < 1) throw ValidationError("oversample-factor", "oversample factor must be >= 1");
    if (cfg.illumination_field) {
        for (double g : cfg.illumination_field->values()) {
            if (!(g > 0.0 && g <= 1.0)) throw ValidationError("out-of-range", "illumination gain outside (0, 1]");
        }
    }
}

Array2 apply_shot_noise(const Array2& y, const NoiseConfig& cfg, std::uint64_t stream) {
    validate(cfg);
    for (double v : y.values()) {
        if (!(v >= 0.0)) throw ValidationError("nonnegative-input", "shot noise needs a nonnegative image");
    }
    Array2 out(y.nx(), y.ny());
    parallel_for(y.nx(), [&](std::size_t i) {
        for (std::size_t j = 0; j < y.ny(); ++j) {
            const std::size_t n = i * y.ny() + j;
            const double mean = cfg.photon_scale * y[n];
            if (mean == 0.0) continue;
            PixelEngine engine(cfg.seed, stream, n);
            double count;
            if (mean <= kPoissonNormalCrossover) {
                std::poisson_distribution<long long> dist(mean);
                count = static_cast<double>(dist(engine));
            } else {
                std::normal_distribution<double> dist(mean, std::sqrt(mean));
                count = std::max(0.0, std::round(dist(engine)));
            }
            out[n] = count / cfg.photon_scale;
        }
    });
    return out;
}

Array2 apply_discretization(const Array2& fine, const NoiseConfig& cfg) {
    validate(cfg);
    const auto f = static_cast<std::size_t>(cfg.oversample_factor);
    if (fine.nx() % f != 0 || fine.ny() % f != 0) {
        throw ValidationError("indivisible-dims", "fine image dims must be multiples of the oversample factor");
    }
    if (f == 1) return fine;
    Array2 out(fine.nx() / f, fine.ny() / f);
    const double inv = 1.0 / static_cast<double>(f * f);
    for (std::size_t i = 0; i < out.nx(); ++i) {
        for (std::size_t j = 0; j < out.ny(); ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < f; ++a) {
                for (std::size_t b = 0; b < f; ++b) s += fine(i * f + a, j * f + b);
            }
            out(i, j) = s * inv;
        }
    }
    return out;
}

Array2 apply_illumination(const Array2& image, const NoiseConfig& cfg) {
    validate(cfg);
    if (!cfg.illumination_field) return image;
    check_field(cfg, image.nx(), image.ny());
    Array2 out = image;
    for (std::size_t n = 0; n < out.size(); ++n) out[n] *= (*cfg.illumination_field)[n];
    return out;
}

ReflectivityVolume apply_illumination(const ReflectivityVolume& volume, const NoiseConfig& cfg) {
    validate(cfg);
    if (!cfg.illumination_field) return volume;
    check_field(cfg, volume.data.nx(), volume.data.ny());
    ReflectivityVolume out = volume;
    const std::size_t plane = volume.data.slice_size();
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] *= (*cfg.illumination_field)[n % plane];
    return out;
}

SourceSpectrum apply_illumination(const SourceSpectrum& source, const NoiseConfig& cfg, std::size_t nx,
                                  std::size_t ny) {
    validate(cfg);
    if (!cfg.illumination_field) return source;
    check_field(cfg, nx, ny);
    SourceSpectrum out = source;
    Array2 field(nx, ny);
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) field(i, j) = source.reference_at(i, j) * (*cfg.illumination_field)(i, j);
    }
    out.reference_field = std::move(field);
    return out;
}

SpectralCube apply_illumination(const SpectralCube& cube, const NoiseConfig& cfg) {
    validate(cfg);
    if (!cfg.illumination_field) return cube;
    check_field(cfg, cube.data.nx(), cube.data.ny());
    SpectralCube out = cube;
    const std::size_t plane = cube.data.slice_size();
    for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] *= (*cfg.illumination_field)[n % plane];
    return out;
}

Array2 quantize(const Array2& electrons, const CameraModel& camera) {
    validate(camera);
    const double levels = std::ldexp(1.0, camera.bit_depth);
    const double step = camera.full_well_capacity_e / levels;
    Array2 out(electrons.nx(), electrons.ny());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double v = std::clamp(electrons[n], 0.0, camera.full_well_capacity_e);
        out[n] = std::min(std::round(v / step), levels) * step;
    }
    return out;
}

Array2 gaussian_vignette(std::size_t nx, std::size_t ny, double sigma_fraction, double floor) {
    Array2 g(nx, ny);
    const double sigma = sigma_fraction * static_cast<double>(std::max(nx, ny));
    const double cx = (static_cast<double>(nx) - 1.0) / 2.0, cy = (static_cast<double>(ny) - 1.0) / 2.0;
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const double dx = static_cast<double>(i) - cx, dy = static_cast<double>(j) - cy;
            g(i, j) = std::max(floor, std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma)));
        }
    }
    return g;
}

}  // namespace snapcube
