#include "lebeaus/cube.hpp"

#include <cmath>
#include <stdexcept>

namespace lebeaus {

HsiCube::HsiCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths)
    : rows_(rows), cols_(cols), wavelengths_(std::move(wavelengths)),
      data_(rows * cols * wavelengths_.size(), 0.0f) {}

HsiCube::HsiCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths,
                 std::vector<float> data)
    : rows_(rows), cols_(cols), wavelengths_(std::move(wavelengths)), data_(std::move(data)) {
    validate();
}

Spectrum HsiCube::pixel(std::size_t pixel_index) const {
    const std::size_t plane = rows_ * cols_;
    Spectrum s(channels());
    for (std::size_t k = 0; k < channels(); ++k) s[k] = data_[k * plane + pixel_index];
    return s;
}

void HsiCube::set_pixel(std::size_t pixel_index, const Spectrum& values) {
    if (static_cast<std::size_t>(values.size()) != channels())
        throw std::invalid_argument("set_pixel: spectrum length does not match channel count");
    const std::size_t plane = rows_ * cols_;
    for (std::size_t k = 0; k < channels(); ++k)
        data_[k * plane + pixel_index] = static_cast<float>(values[k]);
}

Eigen::MatrixXd HsiCube::pixel_matrix() const {
    const std::size_t plane = rows_ * cols_;
    Eigen::MatrixXd m(channels(), plane);
    for (std::size_t k = 0; k < channels(); ++k)
        for (std::size_t p = 0; p < plane; ++p) m(k, p) = data_[k * plane + p];
    return m;
}

void HsiCube::validate() const {
    if (data_.size() != rows_ * cols_ * wavelengths_.size())
        throw std::invalid_argument("cube data length " + std::to_string(data_.size()) +
                                    " does not equal rows*cols*channels " +
                                    std::to_string(rows_ * cols_ * wavelengths_.size()));
    for (std::size_t k = 0; k < wavelengths_.size(); ++k) {
        if (!std::isfinite(wavelengths_[k]))
            throw std::invalid_argument("non-finite wavelength");
        if (k > 0 && !(wavelengths_[k] > wavelengths_[k - 1]))
            throw std::invalid_argument("wavelengths must be strictly increasing");
    }
    for (float v : data_)
        if (!std::isfinite(v)) throw std::invalid_argument("cube contains non-finite radiance");
}

std::size_t PixelMask::count() const {
    std::size_t n = 0;
    for (auto f : flags_) n += f != 0;
    return n;
}

std::vector<std::size_t> PixelMask::indices() const {
    std::vector<std::size_t> out;
    for (std::size_t p = 0; p < flags_.size(); ++p)
        if (flags_[p]) out.push_back(p);
    return out;
}

std::vector<double> linear_wavelengths(double first_um, double last_um, std::size_t count) {
    if (count == 0) throw std::invalid_argument("wavelength grid needs at least one channel");
    std::vector<double> w(count);
    if (count == 1) {
        w[0] = first_um;
        return w;
    }
    const double step = (last_um - first_um) / static_cast<double>(count - 1);
    for (std::size_t k = 0; k < count; ++k) w[k] = first_um + step * static_cast<double>(k);
    w.back() = last_um;
    return w;
}

}  // namespace lebeaus
