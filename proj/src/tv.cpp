#include "snapcube/tv.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "snapcube/error.hpp"
#include "snapcube/parallel.hpp"

namespace snapcube {
namespace {

// Forward differences with Neumann boundary (zero past the last row/column).
void gradient(const double* p, std::size_t nx, std::size_t ny, double* gx, double* gy) {
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t n = i * ny + j;
            gx[n] = i + 1 < nx ? p[n + ny] - p[n] : 0.0;
            gy[n] = j + 1 < ny ? p[n + 1] - p[n] : 0.0;
        }
    }
}

// div = -gradient^T.
void divergence(const double* qx, const double* qy, std::size_t nx, std::size_t ny, double* out) {
    for (std::size_t i = 0; i < nx; ++i) {
        for (std::size_t j = 0; j < ny; ++j) {
            const std::size_t n = i * ny + j;
            double d = 0.0;
            if (i + 1 < nx) d += qx[n];
            if (i > 0) d -= qx[n - ny];
            if (j + 1 < ny) d += qy[n];
            if (j > 0) d -= qy[n - 1];
            out[n] = d;
        }
    }
}

void denoise_slice(const double* f, double* p, std::size_t nx, std::size_t ny, double weight, int iterations) {
    const std::size_t n = nx * ny;
    std::vector<double> qx(n, 0.0), qy(n, 0.0), rx(n, 0.0), ry(n, 0.0);
    std::vector<double> gx(n), gy(n), div(n);
    const double step = 1.0 / (8.0 * weight);
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        divergence(rx.data(), ry.data(), nx, ny, div.data());
        for (std::size_t m = 0; m < n; ++m) p[m] = f[m] + weight * div[m];
        gradient(p, nx, ny, gx.data(), gy.data());
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double momentum = (t - 1.0) / t_next;
        for (std::size_t m = 0; m < n; ++m) {
            const double nx_ = std::clamp(rx[m] + step * gx[m], -1.0, 1.0);
            const double ny_ = std::clamp(ry[m] + step * gy[m], -1.0, 1.0);
            rx[m] = nx_ + momentum * (nx_ - qx[m]);
            ry[m] = ny_ + momentum * (ny_ - qy[m]);
            qx[m] = nx_;
            qy[m] = ny_;
        }
        t = t_next;
    }
    divergence(qx.data(), qy.data(), nx, ny, div.data());
    for (std::size_t m = 0; m < n; ++m) p[m] = f[m] + weight * div[m];
}

}  // namespace

double anisotropic_tv(const Array3& cube) {
    const std::size_t nx = cube.nx(), ny = cube.ny();
    double total = 0.0;
    for (std::size_t k = 0; k < cube.nz(); ++k) {
        auto s = cube.slice(k);
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < ny; ++j) {
                const std::size_t n = i * ny + j;
                if (i + 1 < nx) total += std::abs(s[n + ny] - s[n]);
                if (j + 1 < ny) total += std::abs(s[n + 1] - s[n]);
            }
        }
    }
    return total;
}

Array3 tv_denoise(const Array3& target, double weight, int iterations) {
    if (!(weight >= 0.0)) throw ValidationError("tv-weight", "TV weight must be >= 0");
    if (iterations < 1) throw ValidationError("tv-iterations", "TV iterations must be >= 1");
    if (weight == 0.0) return target;
    Array3 out(target.nx(), target.ny(), target.nz());
    parallel_for(target.nz(), [&](std::size_t k) {
        denoise_slice(target.slice(k).data(), out.slice(k).data(), target.nx(), target.ny(), weight, iterations);
    });
    return out;
}

}  // namespace snapcube
