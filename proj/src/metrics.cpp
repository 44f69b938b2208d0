#include "snapcube/metrics.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "snapcube/error.hpp"

namespace snapcube {

std::vector<double> bar_profile(const Array2& image, const BarGroup& g) {
    const bool vertical = g.orientation == BarOrientation::vertical;
    const std::size_t rows = vertical ? g.length : g.across();
    const std::size_t cols = vertical ? g.across() : g.length;
    if (g.x0 + rows > image.nx() || g.y0 + cols > image.ny()) {
        throw ValidationError("bar-group-fit", "bar group extends past the image");
    }
    std::vector<double> profile(g.across(), 0.0);
    for (std::size_t a = 0; a < rows; ++a) {
        for (std::size_t b = 0; b < cols; ++b) profile[vertical ? b : a] += image(g.x0 + a, g.y0 + b);
    }
    for (double& p : profile) p /= static_cast<double>(g.length);
    return profile;
}

double bar_group_dip(const Array2& image, const BarGroup& g) {
    const auto profile = bar_profile(image, g);
    const std::size_t w = g.bar_width();
    auto segment_max = [&](std::size_t s) {
        return *std::max_element(profile.begin() + static_cast<long>(s * w), profile.begin() + static_cast<long>((s + 1) * w));
    };
    auto segment_min = [&](std::size_t s) {
        return *std::min_element(profile.begin() + static_cast<long>(s * w), profile.begin() + static_cast<long>((s + 1) * w));
    };
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t gap : {1u, 3u}) {
        const double peak = std::min(segment_max(gap - 1), segment_max(gap + 1));
        if (!(peak > 0.0)) return 0.0;
        worst = std::min(worst, (peak - segment_min(gap)) / peak);
    }
    return worst;
}

LateralResolution lateral_resolution(const Array2& image, const std::vector<BarGroup>& groups, double min_dip) {
    LateralResolution out;
    for (const auto& g : groups) {
        GroupContrast c;
        c.period_px = g.period_px;
        c.dip = bar_group_dip(image, g);
        c.resolvable = c.dip >= min_dip;
        out.groups.push_back(c);
    }
    std::sort(out.groups.begin(), out.groups.end(),
              [](const GroupContrast& a, const GroupContrast& b) { return a.period_px < b.period_px; });
    for (auto it = out.groups.rbegin(); it != out.groups.rend(); ++it) {
        if (!it->resolvable) break;
        out.finest_period_px = it->period_px;
    }
    return out;
}

double GaussianFit::fwhm() const { return 2.0 * std::sqrt(2.0 * std::numbers::ln2) * std::abs(sigma); }

namespace {

struct GaussianResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    std::span<const double> y;

    int inputs() const { return 3; }
    int values() const { return static_cast<int>(y.size()); }

    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
        for (std::size_t n = 0; n < y.size(); ++n) {
            const double d = static_cast<double>(n) - p[1];
            r[static_cast<long>(n)] = p[0] * std::exp(-d * d / (2.0 * p[2] * p[2])) - y[n];
        }
        return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
        for (std::size_t n = 0; n < y.size(); ++n) {
            const double d = static_cast<double>(n) - p[1];
            const double e = std::exp(-d * d / (2.0 * p[2] * p[2]));
            const auto row = static_cast<long>(n);
            j(row, 0) = e;
            j(row, 1) = p[0] * e * d / (p[2] * p[2]);
            j(row, 2) = p[0] * e * d * d / (p[2] * p[2] * p[2]);
        }
        return 0;
    }
};

}  // namespace

GaussianFit fit_gaussian(std::span<const double> profile, double min_r_squared) {
    if (profile.size() < 3) throw NumericalError("Gaussian fit needs at least 3 samples");
    const auto peak_it = std::max_element(profile.begin(), profile.end());
    const auto m = static_cast<std::size_t>(peak_it - profile.begin());
    const double peak = *peak_it;
    if (!(peak > 0.0)) throw NumericalError("Gaussian fit: profile has no positive peak");

    // Log-parabola through (m-1, m, m+1); falls back to a one-sample width.
    double center = static_cast<double>(m), sigma = 1.0, amplitude = peak;
    if (m > 0 && m + 1 < profile.size() && profile[m - 1] > 0.0 && profile[m + 1] > 0.0) {
        const double a = std::log(profile[m - 1]), b = std::log(profile[m]), c = std::log(profile[m + 1]);
        const double curvature = a - 2.0 * b + c;
        if (curvature < 0.0) {
            sigma = std::sqrt(-1.0 / curvature);
            const double shift = 0.5 * (a - c) / curvature;
            center = static_cast<double>(m) + shift;
            amplitude = std::exp(b - 0.25 * (a - c) * shift);
        }
    }

    GaussianResidual f{profile};
    Eigen::VectorXd p(3);
    p << amplitude, center, sigma;
    Eigen::LevenbergMarquardt<GaussianResidual> lm(f);
    lm.parameters.maxfev = 400;
    lm.minimize(p);

    GaussianFit fit{p[0], p[1], std::abs(p[2]), 0.0};
    double mean = 0.0;
    for (double v : profile) mean += v;
    mean /= static_cast<double>(profile.size());
    double ss_res = 0.0, ss_tot = 0.0;
    for (std::size_t n = 0; n < profile.size(); ++n) {
        const double d = static_cast<double>(n) - fit.center;
        const double model = fit.amplitude * std::exp(-d * d / (2.0 * fit.sigma * fit.sigma));
        ss_res += (profile[n] - model) * (profile[n] - model);
        ss_tot += (profile[n] - mean) * (profile[n] - mean);
    }
    fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
    if (!std::isfinite(fit.sigma) || !(fit.r_squared >= min_r_squared)) {
        throw NumericalError("Gaussian fit failed (R^2 = " + std::to_string(fit.r_squared) + ")");
    }
    return fit;
}

std::vector<double> axial_profile(const DepthVolume& volume) {
    const auto& a = volume.amplitude;
    std::vector<double> profile(a.nz(), 0.0);
    const double inv = 1.0 / static_cast<double>(a.slice_size());
    for (std::size_t k = 0; k < a.nz(); ++k) {
        double s = 0.0;
        for (double v : a.slice(k)) s += v;
        profile[k] = s * inv;
    }
    return profile;
}

double axial_psf_fwhm_um(std::span<const double> profile, double plane_spacing_um) {
    return fit_gaussian(profile).fwhm() * plane_spacing_um;
}

double axial_psf_fwhm_um(const DepthVolume& volume) {
    const auto profile = axial_profile(volume);
    return axial_psf_fwhm_um(profile, volume.depth.plane_spacing_um);
}

double sensitivity_db(double peak, double floor_sigma) {
    if (!(floor_sigma > 0.0)) throw NumericalError("noise floor has zero spread: SNR is unbounded");
    return 20.0 * std::log10(peak / floor_sigma);
}

double sensitivity_db(const DepthVolume& volume, const std::optional<std::vector<std::size_t>>& floor_planes) {
    const auto profile = axial_profile(volume);
    const auto peak_plane =
        static_cast<std::size_t>(std::max_element(profile.begin(), profile.end()) - profile.begin());
    std::vector<std::size_t> planes;
    if (floor_planes) {
        planes = *floor_planes;
    } else {
        const double fwhm = fit_gaussian(profile, 0.0).fwhm();
        for (std::size_t k = 0; k < profile.size(); ++k) {
            const double dist = std::abs(static_cast<double>(k) - static_cast<double>(peak_plane));
            if (dist >= 10.0 * fwhm) planes.push_back(k);
        }
    }
    if (planes.empty()) throw NumericalError("no noise-floor planes available");
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t k : planes) {
        if (k == peak_plane) throw ValidationError("floor-region", "floor planes must exclude the peak plane");
        if (k >= volume.amplitude.nz()) throw ValidationError("floor-region", "floor plane out of range");
        for (double v : volume.amplitude.slice(k)) {
            sum += v;
            sq += v * v;
            ++n;
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double var = std::max(0.0, sq / static_cast<double>(n) - mean * mean);
    return sensitivity_db(profile[peak_plane], std::sqrt(var));
}

double rmse(std::span<const double> recon, std::span<const double> truth) {
    if (recon.size() != truth.size() || truth.empty()) {
        throw ValidationError("dimension-mismatch", "rmse operands differ in size");
    }
    double s = 0.0;
    for (std::size_t n = 0; n < truth.size(); ++n) s += (recon[n] - truth[n]) * (recon[n] - truth[n]);
    return std::sqrt(s / static_cast<double>(truth.size()));
}

double psnr(std::span<const double> recon, std::span<const double> truth) {
    const double e = rmse(recon, truth);
    const auto [lo, hi] = std::minmax_element(truth.begin(), truth.end());
    if (*lo == *hi) throw ValidationError("constant-truth", "PSNR needs a nonconstant reference");
    if (e == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(*hi / e);
}

}  // namespace snapcube
