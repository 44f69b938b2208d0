#pragma once

#include <optional>
#include <span>
#include <vector>

#include "snapcube/array.hpp"
#include "snapcube/interferometer.hpp"
#include "snapcube/phantoms.hpp"

namespace snapcube {

// ---- lateral resolution -------------------------------------------------

struct GroupContrast {
    std::size_t period_px = 0;
    double dip = 0.0;  // smallest relative dip between adjacent bar peaks
    bool resolvable = false;
};

struct LateralResolution {
    /// Finest period p such that every group with period >= p is resolvable;
    /// empty when even the coarsest group fails ("unresolved").
    std::optional<std::size_t> finest_period_px;
    std::vector<GroupContrast> groups;  // sorted by period, finest first
};

/// Profile across the bars of `group`, averaged over the full bar length.
std::vector<double> bar_profile(const Array2& image, const BarGroup& group);
/// (min(adjacent peaks) - gap minimum) / min(adjacent peaks), worst of the two gaps.
double bar_group_dip(const Array2& image, const BarGroup& group);
LateralResolution lateral_resolution(const Array2& image, const std::vector<BarGroup>& groups,
                                     double min_dip = 0.2);

// ---- axial point spread function ----------------------------------------

struct GaussianFit {
    double amplitude = 0.0;
    double center = 0.0;  // in profile samples
    double sigma = 0.0;   // in profile samples
    double r_squared = 0.0;
    double fwhm() const;  // in profile samples
};

/// Least-squares fit of a * exp(-(x - c)^2 / (2 s^2)). Initialised from a
/// log-parabola through the argmax and its neighbours, refined with
/// Levenberg-Marquardt. Throws NumericalError when R^2 < min_r_squared.
GaussianFit fit_gaussian(std::span<const double> profile, double min_r_squared = 0.9);

/// Transverse mean of an amplitude volume, one value per depth plane.
std::vector<double> axial_profile(const DepthVolume& volume);

/// Gaussian-fit FWHM of the transversely averaged axial profile, in µm.
double axial_psf_fwhm_um(const DepthVolume& volume);
double axial_psf_fwhm_um(std::span<const double> profile, double plane_spacing_um);

// ---- sensitivity -------------------------------------------------------

/// 20 log10(peak / floor_sigma); throws NumericalError when floor_sigma is 0.
double sensitivity_db(double peak, double floor_sigma);

/// Peak of the transversely averaged profile over the standard deviation of
/// every voxel in the floor planes. Default floor: planes at least
/// 10 * FWHM (fitted) away from the peak plane.
double sensitivity_db(const DepthVolume& volume, const std::optional<std::vector<std::size_t>>& floor_planes = {});

// ---- image fidelity ------------------------------------------------------

double rmse(std::span<const double> recon, std::span<const double> truth);
/// 10 log10(max(truth)^2 / mse); +infinity when recon == truth.
/// Throws ValidationError for a constant truth.
double psnr(std::span<const double> recon, std::span<const double> truth);
inline double rmse(const Array3& recon, const Array3& truth) { return rmse(recon.values(), truth.values()); }
inline double psnr(const Array3& recon, const Array3& truth) { return psnr(recon.values(), truth.values()); }

}  // namespace snapcube
