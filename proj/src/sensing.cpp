#include "snapcube/sensing.hpp"

#include <cmath>
#include <random>

#include "snapcube/error.hpp"
#include "snapcube/parallel.hpp"
#include "snapcube/shear.hpp"

namespace snapcube {
namespace {

// Above this channel count the spectral sum switches to Neumaier summation.
constexpr std::size_t kCompensatedThreshold = 256;

}  // namespace

SensingOperator::SensingOperator(CodedAperture aperture, std::size_t num_channels)
    : aperture_(std::move(aperture)), nl_(num_channels) {
    validate(aperture_, nl_);
    nx_ = aperture_.pattern.nx();
    w_ = aperture_.pattern.ny();
    ny_ = aperture_.object_width(nl_);

    masks_ = Array3(nx_, w_, nl_);
    for (std::size_t k = 0; k < nl_; ++k) {
        const std::size_t off = aperture_.channel_offset(k, nl_);
        for (std::size_t i = 0; i < nx_; ++i) {
            auto dst = masks_.row(i, k);
            for (std::size_t j = 0; j < ny_; ++j) dst[off + j] = aperture_.pattern(i, aperture_.aperture_column(j, nl_));
        }
    }
    psi_ = Array2(nx_, w_);
    for (std::size_t k = 0; k < nl_; ++k) {
        auto m = masks_.slice(k);
        for (std::size_t n = 0; n < psi_.size(); ++n) psi_[n] += m[n] * m[n];
    }
}

void SensingOperator::check_sheared(const Array3& x) const {
    if (x.nx() != nx_ || x.ny() != w_ || x.nz() != nl_) {
        throw ValidationError("dimension-mismatch", "sheared cube shape does not match the operator");
    }
}

void SensingOperator::check_measurement(const Array2& y) const {
    if (y.nx() != nx_ || y.ny() != w_) {
        throw ValidationError("dimension-mismatch", "measurement shape does not match the operator");
    }
}

Array2 SensingOperator::apply(const Array3& x) const {
    check_sheared(x);
    Array2 y(nx_, w_);
    const bool compensated = nl_ > kCompensatedThreshold;
    parallel_for(nx_, [&](std::size_t i) {
        auto out = y.row(i);
        if (!compensated) {
            for (std::size_t k = 0; k < nl_; ++k) {
                auto m = masks_.row(i, k);
                auto v = x.row(i, k);
                for (std::size_t j = 0; j < w_; ++j) out[j] += m[j] * v[j];
            }
            return;
        }
        std::vector<double> carry(w_, 0.0);
        for (std::size_t k = 0; k < nl_; ++k) {
            auto m = masks_.row(i, k);
            auto v = x.row(i, k);
            for (std::size_t j = 0; j < w_; ++j) {
                const double term = m[j] * v[j];
                const double t = out[j] + term;
                carry[j] += std::abs(out[j]) >= std::abs(term) ? (out[j] - t) + term : (term - t) + out[j];
                out[j] = t;
            }
        }
        for (std::size_t j = 0; j < w_; ++j) out[j] += carry[j];
    });
    return y;
}

Array3 SensingOperator::apply_adjoint(const Array2& y) const {
    check_measurement(y);
    Array3 x(nx_, w_, nl_);
    parallel_for(nx_, [&](std::size_t i) {
        auto in = y.row(i);
        for (std::size_t k = 0; k < nl_; ++k) {
            auto m = masks_.row(i, k);
            auto out = x.row(i, k);
            for (std::size_t j = 0; j < w_; ++j) out[j] = m[j] * in[j];
        }
    });
    return x;
}

Array2 SensingOperator::forward(const Array3& cube) const {
    if (cube.nx() != nx_ || cube.ny() != ny_ || cube.nz() != nl_) {
        throw ValidationError("dimension-mismatch", "cube shape does not match the operator");
    }
    return apply(shear(cube, aperture_.dispersion_step));
}

Array2 SensingOperator::forward(const SpectralCube& cube) const { return forward(cube.data); }

Array3 SensingOperator::adjoint(const Array2& y) const {
    return unshear(apply_adjoint(y), aperture_.dispersion_step);
}

Array3 SensingOperator::normalized_adjoint(const Array2& y) const {
    check_measurement(y);
    Array2 scaled(nx_, w_);
    for (std::size_t n = 0; n < scaled.size(); ++n) scaled[n] = psi_[n] > 0.0 ? y[n] / psi_[n] : 0.0;
    return apply_adjoint(scaled);
}

std::vector<double> DenseMatrix::multiply(const std::vector<double>& x) const {
    if (x.size() != cols) throw ValidationError("dimension-mismatch", "dense multiply size");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        const double* row = values.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

std::vector<double> DenseMatrix::multiply_transpose(const std::vector<double>& y) const {
    if (y.size() != rows) throw ValidationError("dimension-mismatch", "dense transpose multiply size");
    std::vector<double> x(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = values.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) x[c] += row[c] * y[r];
    }
    return x;
}

DenseMatrix dense_oracle(const SensingOperator& op) {
    const std::size_t nx = op.nx(), w = op.measurement_width(), nl = op.num_channels();
    if (nx * op.ny() * nl > 10000) {
        throw ValidationError("size-guard", "dense oracle limited to nx*ny*nl <= 1e4");
    }
    DenseMatrix m;
    m.rows = nx * w;
    m.cols = nx * w * nl;
    m.values.assign(m.rows * m.cols, 0.0);
    // Block k is Diag(vec(M_k)), M_k taken straight from the aperture definition.
    const CodedAperture& a = op.aperture();
    for (std::size_t k = 0; k < nl; ++k) {
        for (std::size_t i = 0; i < nx; ++i) {
            for (std::size_t j = 0; j < w; ++j) {
                const std::size_t n = i * w + j;
                m.values[n * m.cols + k * m.rows + n] = a.shifted(i, j, k, nl);
            }
        }
    }
    return m;
}

CodedAperture random_binary_aperture(std::size_t nx, std::size_t ny, std::size_t num_channels, int dispersion_step,
                                     std::uint64_t seed, double fill) {
    if (!(fill > 0.0 && fill <= 1.0)) throw ValidationError("out-of-range", "mask fill fraction must be in (0, 1]");
    if (nx == 0 || ny == 0 || num_channels == 0) throw ValidationError("dimension-mismatch", "empty aperture");
    CodedAperture a;
    a.dispersion_step = dispersion_step;
    a.pattern = Array2(nx, measurement_width(ny, num_channels, dispersion_step));
    std::mt19937_64 gen(seed);
    std::bernoulli_distribution open(fill);
    for (double& v : a.pattern.values()) v = open(gen) ? 1.0 : 0.0;
    return a;
}

}  // namespace snapcube
