#include "snapcube/wavelet.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "snapcube/error.hpp"

namespace snapcube {
namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// Lengths of the coarse segment at the start of each level.
std::vector<std::size_t> level_lengths(std::size_t n, int levels) {
    std::vector<std::size_t> lengths;
    std::size_t m = n;
    for (int l = 0; l < levels && m >= 2; ++l) {
        lengths.push_back(m);
        m = m / 2 + m % 2;
    }
    return lengths;
}

void haar_forward_1d(double* x, std::size_t stride, std::size_t n, int levels, std::vector<double>& tmp) {
    tmp.resize(n);
    for (std::size_t m : level_lengths(n, levels)) {
        const std::size_t pairs = m / 2;
        const std::size_t coarse = pairs + m % 2;
        for (std::size_t p = 0; p < pairs; ++p) {
            const double a = x[(2 * p) * stride], b = x[(2 * p + 1) * stride];
            tmp[p] = (a + b) * kInvSqrt2;
            tmp[coarse + p] = (a - b) * kInvSqrt2;
        }
        if (m % 2) tmp[pairs] = x[(m - 1) * stride];
        for (std::size_t q = 0; q < m; ++q) x[q * stride] = tmp[q];
    }
}

void haar_inverse_1d(double* x, std::size_t stride, std::size_t n, int levels, std::vector<double>& tmp) {
    tmp.resize(n);
    const auto lengths = level_lengths(n, levels);
    for (auto it = lengths.rbegin(); it != lengths.rend(); ++it) {
        const std::size_t m = *it;
        const std::size_t pairs = m / 2;
        const std::size_t coarse = pairs + m % 2;
        for (std::size_t p = 0; p < pairs; ++p) {
            const double a = x[p * stride], d = x[(coarse + p) * stride];
            tmp[2 * p] = (a + d) * kInvSqrt2;
            tmp[2 * p + 1] = (a - d) * kInvSqrt2;
        }
        if (m % 2) tmp[m - 1] = x[pairs * stride];
        for (std::size_t q = 0; q < m; ++q) x[q * stride] = tmp[q];
    }
}

template <typename Fn>
void along_axes(Array3& a, Fn&& fn, bool reverse) {
    const std::size_t nx = a.nx(), ny = a.ny(), nz = a.nz();
    std::vector<double> tmp;
    auto y_axis = [&] {
        for (std::size_t k = 0; k < nz; ++k)
            for (std::size_t i = 0; i < nx; ++i) fn(&a(i, 0, k), 1, ny, tmp);
    };
    auto x_axis = [&] {
        for (std::size_t k = 0; k < nz; ++k)
            for (std::size_t j = 0; j < ny; ++j) fn(&a(0, j, k), ny, nx, tmp);
    };
    auto z_axis = [&] {
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t j = 0; j < ny; ++j) fn(&a(i, j, 0), nx * ny, nz, tmp);
    };
    // The axes commute; the fixed order only pins the rounding.
    if (!reverse) {
        x_axis();
        y_axis();
        z_axis();
    } else {
        z_axis();
        y_axis();
        x_axis();
    }
}

}  // namespace

Array3 HaarWavelet3D::forward(const Array3& cube) const {
    if (levels_ < 0) throw ValidationError("wavelet-levels", "levels must be >= 0");
    Array3 c = cube;
    if (c.empty()) return c;
    along_axes(
        c, [&](double* x, std::size_t s, std::size_t n, std::vector<double>& t) { haar_forward_1d(x, s, n, levels_, t); },
        false);
    return c;
}

Array3 HaarWavelet3D::inverse(const Array3& coefficients) const {
    if (levels_ < 0) throw ValidationError("wavelet-levels", "levels must be >= 0");
    Array3 x = coefficients;
    if (x.empty()) return x;
    along_axes(
        x, [&](double* v, std::size_t s, std::size_t n, std::vector<double>& t) { haar_inverse_1d(v, s, n, levels_, t); },
        true);
    return x;
}

double soft_threshold(double c, double threshold) {
    const double mag = std::abs(c) - threshold;
    return mag > 0.0 ? std::copysign(mag, c) : 0.0;
}

Array3 soft_threshold(const Array3& coefficients, double threshold) {
    if (!(threshold >= 0.0)) throw ValidationError("threshold", "soft threshold must be >= 0");
    Array3 out = coefficients;
    for (double& v : out.values()) v = soft_threshold(v, threshold);
    return out;
}

}  // namespace snapcube
