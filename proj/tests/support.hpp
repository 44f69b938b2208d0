#pragma once

// Test-side oracles. Nothing here calls the code it is used to check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snapcube/array.hpp"
#include "snapcube/types.hpp"

namespace testing {

inline snapcube::Array3 random_cube(std::size_t nx, std::size_t ny, std::size_t nz, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    snapcube::Array3 a(nx, ny, nz);
    for (double& v : a.values()) v = n(rng);
    return a;
}

inline snapcube::Array2 random_image(std::size_t nx, std::size_t ny, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    snapcube::Array2 a(nx, ny);
    for (double& v : a.values()) v = n(rng);
    return a;
}

/// Binary pattern of the given width drawn independently of the library.
inline snapcube::CodedAperture coin_aperture(std::size_t nx, std::size_t width, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    snapcube::CodedAperture a;
    a.pattern = snapcube::Array2(nx, width);
    for (double& v : a.pattern.values()) v = static_cast<double>(rng() & 1u);
    return a;
}

inline std::uint64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b)) return UINT64_MAX;
    auto key = [](double d) {
        const auto u = std::bit_cast<std::uint64_t>(d);
        return (u >> 63) ? ~u + 1 : u | (std::uint64_t{1} << 63);
    };
    const auto ka = key(a), kb = key(b);
    return ka > kb ? ka - kb : kb - ka;
}

/// Phi as an explicit matrix, assembled column block by column block:
/// Phi = [D_1 ... D_nl], D_k = diag(vec M_k). Channel k occupies camera
/// columns [off_k, off_k + ny) with off_k = step k - min(0, step (nl - 1));
/// the pattern is the camera image at channel (nl - 1) / 2.
struct DensePhi {
    Eigen::MatrixXd a;
    std::size_t nx = 0, ny = 0, nl = 0, w = 0;
};

inline DensePhi dense_phi(const snapcube::CodedAperture& ap, std::size_t nl) {
    DensePhi d;
    d.nl = nl;
    d.nx = ap.pattern.nx();
    d.w = ap.pattern.ny();
    const long step = ap.dispersion_step;
    const long span = step * static_cast<long>(nl - 1);
    d.ny = d.w - static_cast<std::size_t>(std::abs(span));
    const long base = -std::min(0L, span);
    const long ref = step * static_cast<long>((nl - 1) / 2) + base;
    d.a = Eigen::MatrixXd::Zero(static_cast<long>(d.nx * d.w), static_cast<long>(d.nx * d.w * nl));
    for (std::size_t k = 0; k < nl; ++k) {
        const long off = step * static_cast<long>(k) + base;
        for (std::size_t i = 0; i < d.nx; ++i) {
            for (long jp = off; jp < off + static_cast<long>(d.ny); ++jp) {
                const long row = static_cast<long>(i * d.w) + jp;
                const long col = static_cast<long>(k * d.nx * d.w) + row;
                d.a(row, col) = ap.pattern(i, static_cast<std::size_t>(jp - off + ref));
            }
        }
    }
    return d;
}

inline Eigen::VectorXd vec(const snapcube::Array3& a) {
    return Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<long>(a.size()));
}
inline Eigen::VectorXd vec(const snapcube::Array2& a) {
    return Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<long>(a.size()));
}

/// Naive product in column order, one accumulator per row.
inline std::vector<double> naive_multiply(const Eigen::MatrixXd& m, const Eigen::VectorXd& x) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()), 0.0);
    for (long c = 0; c < m.cols(); ++c) {
        for (long r = 0; r < m.rows(); ++r) {
            if (m(r, c) != 0.0) out[static_cast<std::size_t>(r)] += m(r, c) * x(c);
        }
    }
    return out;
}

/// |(1/N) sum_k x_k exp(+2 pi i k p / N)| for p < (N + 1) / 2.
inline std::vector<double> dft_magnitude(const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> out((n + 1) / 2);
    for (std::size_t p = 0; p < out.size(); ++p) {
        std::complex<double> s = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double ph = 2.0 * M_PI * static_cast<double>(k * p % n) / static_cast<double>(n);
            s += x[k] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        out[p] = std::abs(s) / static_cast<double>(n);
    }
    return out;
}

inline double rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::current_path() / "scratch" / name;
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace testing
