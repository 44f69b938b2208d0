#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

namespace snapcube {

// Memory layout shared by every array and file in the project: y is the
// fastest axis, then x, then the third axis (spectral channel or depth plane).
//   Array2: index = i * ny + j
//   Array3: index = (k * nx + i) * ny + j
// so each channel/plane is one contiguous Array2-shaped slice.

class Array2 {
public:
    Array2() = default;
    Array2(std::size_t nx, std::size_t ny, double fill = 0.0)
        : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * ny_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * ny_ + j]; }
    double& operator[](std::size_t n) { return data_[n]; }
    double operator[](std::size_t n) const { return data_[n]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * ny_, ny_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * ny_, ny_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Array2& o) const noexcept { return nx_ == o.nx_ && ny_ == o.ny_; }
    bool operator==(const Array2&) const = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::vector<double> data_;
};

class Array3 {
public:
    Array3() = default;
    Array3(std::size_t nx, std::size_t ny, std::size_t nz, double fill = 0.0)
        : nx_(nx), ny_(ny), nz_(nz), data_(nx * ny * nz, fill) {}

    std::size_t nx() const noexcept { return nx_; }
    std::size_t ny() const noexcept { return ny_; }
    std::size_t nz() const noexcept { return nz_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t slice_size() const noexcept { return nx_ * ny_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(k * nx_ + i) * ny_ + j];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(k * nx_ + i) * ny_ + j];
    }
    double& operator[](std::size_t n) { return data_[n]; }
    double operator[](std::size_t n) const { return data_[n]; }

    std::span<double> slice(std::size_t k) { return {data_.data() + k * nx_ * ny_, nx_ * ny_}; }
    std::span<const double> slice(std::size_t k) const {
        return {data_.data() + k * nx_ * ny_, nx_ * ny_};
    }
    std::span<double> row(std::size_t i, std::size_t k) {
        return {data_.data() + (k * nx_ + i) * ny_, ny_};
    }
    std::span<const double> row(std::size_t i, std::size_t k) const {
        return {data_.data() + (k * nx_ + i) * ny_, ny_};
    }

    Array2 slice_copy(std::size_t k) const {
        Array2 out(nx_, ny_);
        auto s = slice(k);
        std::copy(s.begin(), s.end(), out.data());
        return out;
    }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    bool same_shape(const Array3& o) const noexcept {
        return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_;
    }
    bool operator==(const Array3&) const = default;

private:
    std::size_t nx_ = 0;
    std::size_t ny_ = 0;
    std::size_t nz_ = 0;
    std::vector<double> data_;
};

}  // namespace snapcube
