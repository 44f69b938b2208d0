#include "snapcube/interferometer.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "snapcube/error.hpp"
#include "snapcube/parallel.hpp"

namespace snapcube {

SourceSpectrum gaussian_source(const SpectralGrid& grid, double fwhm_bandwidth_nm, double reference_intensity) {
    validate(grid);
    if (!(fwhm_bandwidth_nm > 0.0)) throw ValidationError("fwhm-bandwidth", "source FWHM must be positive");
    SourceSpectrum s;
    s.grid = grid;
    s.fwhm_bandwidth_nm = fwhm_bandwidth_nm;
    s.reference_intensity = reference_intensity;
    s.envelope.resize(grid.num_channels);
    const double sigma = fwhm_bandwidth_nm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
    double peak = 0.0;
    for (std::size_t j = 0; j < grid.num_channels; ++j) {
        const double d = grid.wavelength_nm(j) - grid.center_wavelength_nm;
        s.envelope[j] = std::exp(-0.5 * d * d / (sigma * sigma));
        peak = std::max(peak, s.envelope[j]);
    }
    for (double& e : s.envelope) e /= peak;
    return s;
}

void validate(const SourceSpectrum& s) {
    validate(s.grid);
    if (s.envelope.size() != s.grid.num_channels) {
        throw ValidationError("dimension-mismatch", "envelope length differs from channel count");
    }
    double peak = 0.0;
    for (double e : s.envelope) {
        if (!std::isfinite(e) || e < 0.0) throw ValidationError("out-of-range", "envelope must be finite and >= 0");
        peak = std::max(peak, e);
    }
    if (std::abs(peak - 1.0) > 1e-12) throw ValidationError("envelope-normalised", "envelope maximum must be 1");
    if (!(s.fwhm_bandwidth_nm > 0.0)) throw ValidationError("fwhm-bandwidth", "source FWHM must be positive");
    if (!(s.reference_intensity >= 0.0)) throw ValidationError("out-of-range", "reference intensity must be >= 0");
    if (s.reference_field) {
        for (double v : s.reference_field->values()) {
            if (!std::isfinite(v) || v < 0.0) throw ValidationError("out-of-range", "reference field must be >= 0");
        }
    }
}

EncodedCube encode_depth(const ReflectivityVolume& volume, const SourceSpectrum& source) {
    validate(volume);
    validate(source);
    const SpectralGrid& grid = source.grid;
    const std::size_t nx = volume.data.nx(), ny = volume.data.ny(), nl = grid.num_channels;
    if (source.reference_field &&
        (source.reference_field->nx() != nx || source.reference_field->ny() != ny)) {
        throw ValidationError("dimension-mismatch", "reference field shape differs from volume");
    }

    const double fov_nm = axial_fov_mm(grid.center_wavelength_nm, grid.channel_spacing_nm) * 1e6;
    const std::size_t nz = volume.depth.num_planes;
    std::vector<double> z_nm(nz);
    for (std::size_t p = 0; p < nz; ++p) {
        z_nm[p] = volume.depth.z_um(p) * 1000.0;
        if (z_nm[p] < 0.0) throw ValidationError("nonnegative-depth", "plane below the reference mirror");
        bool occupied = false;
        for (std::size_t n = 0; n < nx * ny && !occupied; ++n) occupied = volume.data[p * nx * ny + n] > 0.0;
        if (occupied && z_nm[p] >= fov_nm) {
            throw ValidationError("axial-fov", "reflector at " + std::to_string(z_nm[p] / 1000.0) +
                                                   " um is beyond the axial field of view (aliasing)");
        }
    }

    // cos(2 pi * 2z / lambda_j) for every (plane, channel).
    std::vector<double> fringe(nz * nl);
    for (std::size_t p = 0; p < nz; ++p) {
        for (std::size_t k = 0; k < nl; ++k) {
            fringe[p * nl + k] = std::cos(2.0 * std::numbers::pi * 2.0 * z_nm[p] / grid.wavelength_nm(k));
        }
    }

    auto make = [&](CubeKind kind) {
        SpectralCube c;
        c.data = Array3(nx, ny, nl);
        c.grid = grid;
        c.kind = kind;
        return c;
    };
    EncodedCube out{make(CubeKind::total_intensity), make(CubeKind::ac_only), make(CubeKind::total_intensity),
                    make(CubeKind::total_intensity)};

    parallel_for(nx, [&](std::size_t i) {
        std::vector<double> ac(nl);
        for (std::size_t j = 0; j < ny; ++j) {
            const double ir = source.reference_at(i, j);
            double sample_dc = 0.0;
            std::fill(ac.begin(), ac.end(), 0.0);
            for (std::size_t p = 0; p < nz; ++p) {
                const double is = volume.data(i, j, p);
                if (is <= 0.0) continue;
                sample_dc += is;
                const double amp = 2.0 * std::sqrt(ir * is);
                for (std::size_t k = 0; k < nl; ++k) ac[k] += amp * fringe[p * nl + k];
            }
            for (std::size_t k = 0; k < nl; ++k) {
                const double e = source.envelope[k];
                out.ac.data(i, j, k) = e * ac[k];
                out.dc_reference.data(i, j, k) = e * ir;
                out.dc_sample.data(i, j, k) = e * sample_dc;
                out.total.data(i, j, k) = e * ac[k] + e * ir + e * sample_dc;
            }
        }
    });
    return out;
}

SpectralCube subtract_dc(const SpectralCube& total, const SpectralCube& dc_reference, const SpectralCube& dc_sample) {
    if (!total.data.same_shape(dc_reference.data) || !total.data.same_shape(dc_sample.data)) {
        throw ValidationError("dimension-mismatch", "subtract_dc operands differ in shape");
    }
    SpectralCube out;
    out.grid = total.grid;
    out.kind = CubeKind::ac_only;
    out.data = Array3(total.data.nx(), total.data.ny(), total.data.nz());
    for (std::size_t n = 0; n < out.data.size(); ++n) {
        out.data[n] = total.data[n] - dc_reference.data[n] - dc_sample.data[n];
    }
    return out;
}

Array2 subtract_dc(const Array2& total, const Array2& dc_reference, const Array2& dc_sample) {
    if (!total.same_shape(dc_reference) || !total.same_shape(dc_sample)) {
        throw ValidationError("dimension-mismatch", "subtract_dc operands differ in shape");
    }
    Array2 out(total.nx(), total.ny());
    for (std::size_t n = 0; n < out.size(); ++n) out[n] = total[n] - dc_reference[n] - dc_sample[n];
    return out;
}

Measurement subtract_dc(const Measurement& raw) {
    if (!raw.dc_reference || !raw.dc_sample) {
        throw ValidationError("dc-frames", "measurement lacks DC reference/sample frames");
    }
    Measurement out;
    out.camera = raw.camera;
    out.image = subtract_dc(raw.image, *raw.dc_reference, *raw.dc_sample);
    return out;
}

namespace {
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

DepthVolume decode_depth(const SpectralCube& ac) {
    validate(ac);
    const std::size_t nx = ac.data.nx(), ny = ac.data.ny(), nl = ac.data.nz();
    const std::size_t pixels = nx * ny;
    const std::size_t half = nl / 2 + 1;  // r2c output length
    const std::size_t kept = (nl + 1) / 2;

    DepthVolume out;
    out.depth = DepthGrid::from_spectral(ac.grid);
    out.amplitude = Array3(nx, ny, kept);
    if (pixels == 0) return out;

    // One batched real-to-complex transform over every lateral pixel; the
    // input is strided by the slice size in the project layout.
    std::vector<double> in(ac.data.values().begin(), ac.data.values().end());
    auto* spectrum = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * half * pixels));
    if (!spectrum) throw std::bad_alloc();
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int n = static_cast<int>(nl);
        plan = fftw_plan_many_dft_r2c(1, &n, static_cast<int>(pixels), in.data(), nullptr,
                                      static_cast<int>(pixels), 1, spectrum, nullptr, 1, static_cast<int>(half),
                                      FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    const double scale = 1.0 / static_cast<double>(nl);
    for (std::size_t n = 0; n < pixels; ++n) {
        for (std::size_t b = 0; b < kept; ++b) {
            const fftw_complex& c = spectrum[n * half + b];
            out.amplitude[b * pixels + n] = std::hypot(c[0], c[1]) * scale;
        }
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(spectrum);
    return out;
}

namespace {
void require_positive(std::initializer_list<double> values, const char* op) {
    for (double v : values) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ValidationError("positive-input", std::string(op) + " needs positive finite inputs");
        }
    }
}
}  // namespace

double axial_resolution_um(double center_wavelength_nm, double fwhm_bandwidth_nm) {
    require_positive({center_wavelength_nm, fwhm_bandwidth_nm}, "axial_resolution");
    return 0.44 * center_wavelength_nm * center_wavelength_nm / fwhm_bandwidth_nm / 1000.0;
}

double axial_fov_mm(double center_wavelength_nm, double channel_spacing_nm) {
    require_positive({center_wavelength_nm, channel_spacing_nm}, "axial_fov");
    return center_wavelength_nm * center_wavelength_nm / (4.0 * channel_spacing_nm) / 1e6;
}

double spectral_resolution_nm(double pixel_pitch_um, double grating_period_um, double focal_length_mm) {
    require_positive({pixel_pitch_um, grating_period_um, focal_length_mm}, "spectral_resolution");
    // µm * µm / mm = 1e-9 m
    return pixel_pitch_um * grating_period_um / focal_length_mm;
}

double theoretical_sensitivity_db(double full_well_capacity_e) {
    require_positive({full_well_capacity_e}, "theoretical_sensitivity");
    return 10.0 * std::log10(full_well_capacity_e);
}

double depth_interval_um(double center_wavelength_nm, double sampled_width_nm) {
    require_positive({center_wavelength_nm, sampled_width_nm}, "depth_interval");
    return center_wavelength_nm * center_wavelength_nm / (2.0 * sampled_width_nm) / 1000.0;
}

}  // namespace snapcube
