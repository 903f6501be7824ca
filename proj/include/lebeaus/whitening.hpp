#pragma once

#include <filesystem>

#include "lebeaus/cube.hpp"

namespace lebeaus {

// Scene mean and sample covariance (N-1 divisor) over the pixels left
// after excluding a mask, normally the plume ROI.
struct SceneStats {
    Spectrum mean;
    Eigen::MatrixXd covariance;
    std::size_t pixel_count = 0;
};

// Symmetric inverse square root of a (regularized) covariance.
struct WhiteningTransform {
    Eigen::MatrixXd inv_sqrt;
    double ridge = 0.0;  // eigenvalue floor actually applied

    std::size_t channels() const { return static_cast<std::size_t>(inv_sqrt.rows()); }
};

inline constexpr double kDefaultRidgeScale = 1e-6;

SceneStats global_stats(const HsiCube& cube, const PixelMask& exclude);

// Same statistics over an explicit set of pixel spectra (columns of `pixels`).
SceneStats stats_from_columns(const Eigen::MatrixXd& pixels);

// Eigenvalues are clamped to max(lambda, ridge_scale * lambda_max) before
// inverting, which keeps the result symmetric and finite.
WhiteningTransform inverse_sqrt(const SceneStats& stats, double ridge_scale = kDefaultRidgeScale);

// z = inv_sqrt * (x - background)
Spectrum whiten(const Spectrum& x, const Spectrum& background, const WhiteningTransform& transform);

void save_stats(const SceneStats& stats, const std::vector<double>& wavelengths,
                const std::filesystem::path& mean_csv, const std::filesystem::path& covariance_csv);
SceneStats load_stats(const std::filesystem::path& mean_csv, const std::filesystem::path& covariance_csv);

}  // namespace lebeaus
