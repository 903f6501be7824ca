#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lebeaus/cube.hpp"

namespace lebeaus {

// Additive model y_i = b + alpha_i * t over N pixels (columns of `pixels`).
// Clean pixels have alpha pinned at zero.
struct IbateProblem {
    Eigen::MatrixXd pixels;
    std::vector<std::uint8_t> clean;
    Spectrum init_b;
    Spectrum init_t;
    Eigen::VectorXd init_alpha;

    std::size_t size() const { return static_cast<std::size_t>(pixels.cols()); }
    std::size_t channels() const { return static_cast<std::size_t>(pixels.rows()); }
    std::size_t free_count() const;
    void validate() const;
};

// Initialization: with clean pixels, b0 is their mean and t0 is the mean
// of the contaminated pixels minus b0. Without any, b0 falls back to the
// supplied global mean. alpha0 is 1 on contaminated pixels, 0 on clean ones.
IbateProblem make_ibate_problem(Eigen::MatrixXd pixels, std::vector<std::uint8_t> clean,
                                const std::optional<Spectrum>& global_mean = std::nullopt);

struct AdditiveFit {
    Spectrum b;
    Spectrum t;
    Eigen::VectorXd alpha;
    std::vector<double> objective_trace;  // one entry per completed sweep
    std::size_t iterations = 0;
    bool converged = false;
    bool collapsed = false;  // every free alpha went to zero, t was reset to 0
};

struct IbateOptions {
    std::size_t max_iter = 100;
    double rel_tol = 1e-8;
};

// (1/N) * sum_i ||y_i - (b + alpha_i t)||^2
double objective(const IbateProblem& problem, const Spectrum& b, const Spectrum& t, const Eigen::VectorXd& alpha);

// alpha_i = max(0, (y_i - b)^T t / t^T t) on free pixels, 0 on clean ones.
Eigen::VectorXd update_alpha(const IbateProblem& problem, const Spectrum& b, const Spectrum& t);

// b = (1/N) * sum_i (y_i - alpha_i t)
Spectrum update_background(const IbateProblem& problem, const Spectrum& t, const Eigen::VectorXd& alpha);

// t = sum_i alpha_i (y_i - b) / sum_i alpha_i^2. Throws when every alpha is zero.
Spectrum update_target(const IbateProblem& problem, const Spectrum& b, const Eigen::VectorXd& alpha);

// Alternates alpha -> b -> t until the relative objective decrease drops
// below rel_tol, the objective reaches round-off level, or max_iter sweeps.
// A sweep that would raise the objective is discarded and ends the run.
AdditiveFit run_ibate(const IbateProblem& problem, const IbateOptions& options = {});

nlohmann::json to_json(const AdditiveFit& fit);

}  // namespace lebeaus
