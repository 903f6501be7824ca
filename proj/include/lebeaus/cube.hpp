#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lebeaus {

// A spectrum is one value per channel, in the channel order of its cube.
// Arithmetic is always carried out in double precision.
using Spectrum = Eigen::VectorXd;

// Hyperspectral radiance cube, band-sequential.
//
// Storage is float32 to match the on-disk payload exactly; element
// (row, col, channel k) lives at k * rows * cols + row * cols + col.
// Pixel index p = row * cols + col is used everywhere a flat pixel id is needed.
class HsiCube {
public:
    HsiCube() = default;
    HsiCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths);
    HsiCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths,
            std::vector<float> data);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t channels() const { return wavelengths_.size(); }
    std::size_t pixel_count() const { return rows_ * cols_; }

    const std::vector<double>& wavelengths() const { return wavelengths_; }
    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    float& at(std::size_t row, std::size_t col, std::size_t channel) {
        return data_[offset(row, col, channel)];
    }
    float at(std::size_t row, std::size_t col, std::size_t channel) const {
        return data_[offset(row, col, channel)];
    }

    std::size_t offset(std::size_t row, std::size_t col, std::size_t channel) const {
        return channel * rows_ * cols_ + row * cols_ + col;
    }

    Spectrum pixel(std::size_t pixel_index) const;
    Spectrum pixel(std::size_t row, std::size_t col) const { return pixel(row * cols_ + col); }
    void set_pixel(std::size_t pixel_index, const Spectrum& values);

    // channels x pixels matrix, column p holds pixel p.
    Eigen::MatrixXd pixel_matrix() const;

    // Throws std::invalid_argument if any invariant is broken.
    void validate() const;

    friend bool operator==(const HsiCube&, const HsiCube&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> wavelengths_;
    std::vector<float> data_;
};

// Per-pixel boolean flags; the plume ROI is the usual instance.
class PixelMask {
public:
    PixelMask() = default;
    PixelMask(std::size_t rows, std::size_t cols, bool value = false)
        : rows_(rows), cols_(cols), flags_(rows * cols, value ? 1 : 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return flags_.size(); }

    bool operator()(std::size_t row, std::size_t col) const { return flags_[row * cols_ + col] != 0; }
    bool operator[](std::size_t pixel_index) const { return flags_[pixel_index] != 0; }
    void set(std::size_t row, std::size_t col, bool value = true) { flags_[row * cols_ + col] = value ? 1 : 0; }
    void set(std::size_t pixel_index, bool value = true) { flags_[pixel_index] = value ? 1 : 0; }

    std::size_t count() const;
    std::vector<std::size_t> indices() const;
    bool matches(const HsiCube& cube) const { return rows_ == cube.rows() && cols_ == cube.cols(); }

    friend bool operator==(const PixelMask&, const PixelMask&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> flags_;
};

// Evenly spaced wavelength grid, inclusive of both ends.
std::vector<double> linear_wavelengths(double first_um, double last_um, std::size_t count);

}  // namespace lebeaus
