#include "lebeaus/whitening.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "lebeaus/io.hpp"

namespace lebeaus {

SceneStats stats_from_columns(const Eigen::MatrixXd& pixels) {
    const auto c = pixels.rows();
    const auto n = pixels.cols();
    if (n < c + 1)
        throw std::invalid_argument("need at least channels+1 = " + std::to_string(c + 1) +
                                    " pixels for a covariance, have " + std::to_string(n));
    SceneStats s;
    s.pixel_count = static_cast<std::size_t>(n);
    // Two passes with a fixed column order so the result does not depend on blocking.
    s.mean = Spectrum::Zero(c);
    for (Eigen::Index p = 0; p < n; ++p) s.mean += pixels.col(p);
    s.mean /= static_cast<double>(n);

    s.covariance = Eigen::MatrixXd::Zero(c, c);
    Spectrum d(c);
    for (Eigen::Index p = 0; p < n; ++p) {
        d = pixels.col(p) - s.mean;
        s.covariance.selfadjointView<Eigen::Lower>().rankUpdate(d);
    }
    s.covariance.triangularView<Eigen::StrictlyUpper>() = s.covariance.transpose();
    s.covariance /= static_cast<double>(n - 1);
    return s;
}

SceneStats global_stats(const HsiCube& cube, const PixelMask& exclude) {
    if (!exclude.matches(cube)) throw std::invalid_argument("global_stats: mask dimensions do not match cube");
    const std::size_t included = cube.pixel_count() - exclude.count();
    const std::size_t plane = cube.pixel_count();
    Eigen::MatrixXd cols(cube.channels(), included);
    const auto data = cube.data();
    Eigen::Index j = 0;
    for (std::size_t p = 0; p < plane; ++p) {
        if (exclude[p]) continue;
        for (std::size_t k = 0; k < cube.channels(); ++k) cols(k, j) = data[k * plane + p];
        ++j;
    }
    return stats_from_columns(cols);
}

WhiteningTransform inverse_sqrt(const SceneStats& stats, double ridge_scale) {
    const auto& C = stats.covariance;
    if (C.rows() != C.cols() || C.rows() == 0) throw std::invalid_argument("covariance must be square and nonempty");
    if (!(ridge_scale >= 0.0)) throw std::invalid_argument("ridge_scale must be nonnegative");
    const double scale = std::max(1.0, C.cwiseAbs().maxCoeff());
    if ((C - C.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("covariance is not symmetric");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
    if (eig.info() != Eigen::Success) throw std::runtime_error("covariance eigendecomposition failed");
    Spectrum lambda = eig.eigenvalues();
    const double lambda_max = lambda.maxCoeff();
    if (!(lambda_max > 0.0)) throw std::invalid_argument("covariance is identically zero; cannot whiten");

    const double floor = ridge_scale * lambda_max;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        double l = std::max(lambda[i], floor);
        if (!(l > 0.0))
            throw std::invalid_argument("covariance is singular; use a positive ridge_scale");
        lambda[i] = 1.0 / std::sqrt(l);
    }
    const auto& V = eig.eigenvectors();
    WhiteningTransform t;
    t.inv_sqrt = V * lambda.asDiagonal() * V.transpose();
    // Exact symmetry, so z is basis independent to the last bit.
    t.inv_sqrt = 0.5 * (t.inv_sqrt + t.inv_sqrt.transpose()).eval();
    t.ridge = floor;
    return t;
}

Spectrum whiten(const Spectrum& x, const Spectrum& background, const WhiteningTransform& transform) {
    if (x.size() != background.size() || x.size() != transform.inv_sqrt.cols())
        throw std::invalid_argument("whiten: dimension mismatch");
    return transform.inv_sqrt * (x - background);
}

void save_stats(const SceneStats& stats, const std::vector<double>& wavelengths,
                const std::filesystem::path& mean_csv, const std::filesystem::path& covariance_csv) {
    save_spectrum_csv(stats.mean, wavelengths, mean_csv);
    save_matrix_csv(stats.covariance, covariance_csv);
}

SceneStats load_stats(const std::filesystem::path& mean_csv, const std::filesystem::path& covariance_csv) {
    SceneStats s;
    s.mean = load_spectrum_csv(mean_csv);
    s.covariance = load_matrix_csv(covariance_csv);
    if (s.covariance.rows() != s.mean.size() || s.covariance.cols() != s.mean.size())
        throw std::runtime_error("covariance CSV does not match the mean spectrum length");
    return s;
}

}  // namespace lebeaus
