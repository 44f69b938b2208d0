#pragma once

#include <cstdint>

#include <cstddef>
#include <vector>

#include "snapcube/array.hpp"
#include "snapcube/types.hpp"

namespace snapcube {

/// Matrix-free compressive sampling operator
///   y = Phi x = sum_k D_k x_k,   D_k = diag(vec(M_k)),
/// acting on the sheared cube x (nx, W, nl) with W = ny + |step|(nl-1).
/// The dense matrix is never formed; see dense_oracle() for tests.
class SensingOperator {
public:
    SensingOperator(CodedAperture aperture, std::size_t num_channels);

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t num_channels() const noexcept { return nl_; }
    std::size_t measurement_width() const noexcept { return w_; }
    const CodedAperture& aperture() const noexcept { return aperture_; }
    /// M_k for every channel in the sheared frame, shape (nx, W, nl).
    const Array3& channel_masks() const noexcept { return masks_; }

    /// Phi on the sheared frame.
    Array2 apply(const Array3& sheared) const;
    /// Phi^T on the sheared frame.
    Array3 apply_adjoint(const Array2& y) const;

    /// Object-frame forward model: shear then Phi. `cube` is (nx, ny, nl).
    Array2 forward(const Array3& cube) const;
    Array2 forward(const SpectralCube& cube) const;
    /// Adjoint of forward(): unshear(Phi^T y), shape (nx, ny, nl).
    Array3 adjoint(const Array2& y) const;

    /// Diagonal of Phi Phi^T: psi(i, j') = sum_k M_k(i, j')^2.
    const Array2& psi() const noexcept { return psi_; }

    /// Phi^T (y / psi) with psi == 0 pixels mapped to 0. Sheared frame.
    Array3 normalized_adjoint(const Array2& y) const;

private:
    void check_sheared(const Array3& x) const;
    void check_measurement(const Array2& y) const;

    CodedAperture aperture_;
    std::size_t nx_ = 0, ny_ = 0, nl_ = 0, w_ = 0;
    Array3 masks_;
    Array2 psi_;
};

/// Explicit row-major matrix, used only to check the implicit operator.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::vector<double> multiply(const std::vector<double>& x) const;
    std::vector<double> multiply_transpose(const std::vector<double>& y) const;
};

/// Phi = [D_1, ..., D_nl] with rows indexed by vec(Y) (n = i * W + j') and
/// columns by vec(X') (k * nx * W + n). Refuses nx * ny * nl > 1e4.
DenseMatrix dense_oracle(const SensingOperator& op);

/// Seeded random binary aperture for an (nx, ny) object and `num_channels`
/// channels; each element is open with probability `fill`.
CodedAperture random_binary_aperture(std::size_t nx, std::size_t ny, std::size_t num_channels, int dispersion_step,
                                     std::uint64_t seed, double fill = 0.5);

}  // namespace snapcube
