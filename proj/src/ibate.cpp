#include "lebeaus/ibate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace lebeaus {

namespace {

void require_channels(const IbateProblem& p, const Spectrum& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != p.channels())
        throw std::invalid_argument(std::string(what) + " length does not match the channel count");
}

void require_alpha(const IbateProblem& p, const Eigen::VectorXd& alpha) {
    if (static_cast<std::size_t>(alpha.size()) != p.size())
        throw std::invalid_argument("alpha length does not match the pixel count");
}

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::size_t IbateProblem::free_count() const {
    std::size_t n = 0;
    for (auto c : clean) n += c == 0;
    return n;
}

void IbateProblem::validate() const {
    if (pixels.cols() == 0 || pixels.rows() == 0) throw std::invalid_argument("iBATE problem has no pixels");
    if (clean.size() != size()) throw std::invalid_argument("clean flags do not match the pixel count");
    require_channels(*this, init_b, "init_b");
    require_channels(*this, init_t, "init_t");
    require_alpha(*this, init_alpha);
    if (!pixels.allFinite()) throw std::invalid_argument("iBATE pixels must be finite");
    for (std::size_t i = 0; i < size(); ++i) {
        if (init_alpha[static_cast<Eigen::Index>(i)] < 0.0) throw std::invalid_argument("init_alpha must be >= 0");
        if (clean[i] && init_alpha[static_cast<Eigen::Index>(i)] != 0.0)
            throw std::invalid_argument("clean pixels must start with alpha = 0");
    }
}

IbateProblem make_ibate_problem(Eigen::MatrixXd pixels, std::vector<std::uint8_t> clean,
                                const std::optional<Spectrum>& global_mean) {
    IbateProblem p;
    p.pixels = std::move(pixels);
    p.clean = std::move(clean);
    if (p.clean.size() != p.size()) throw std::invalid_argument("clean flags do not match the pixel count");
    const auto c = p.pixels.rows();
    Spectrum clean_sum = Spectrum::Zero(c), dirty_sum = Spectrum::Zero(c);
    std::size_t n_clean = 0, n_dirty = 0;
    p.init_alpha = Eigen::VectorXd::Zero(p.pixels.cols());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto col = p.pixels.col(static_cast<Eigen::Index>(i));
        if (p.clean[i]) {
            clean_sum += col;
            ++n_clean;
        } else {
            dirty_sum += col;
            ++n_dirty;
            p.init_alpha[static_cast<Eigen::Index>(i)] = 1.0;
        }
    }
    if (n_clean > 0) {
        p.init_b = clean_sum / static_cast<double>(n_clean);
    } else {
        if (!global_mean) throw std::invalid_argument("no clean pixels and no global mean for initialization");
        p.init_b = *global_mean;
    }
    p.init_t = n_dirty > 0 ? Spectrum(dirty_sum / static_cast<double>(n_dirty) - p.init_b) : Spectrum::Zero(c);
    p.validate();
    return p;
}

double objective(const IbateProblem& problem, const Spectrum& b, const Spectrum& t, const Eigen::VectorXd& alpha) {
    require_channels(problem, b, "b");
    require_channels(problem, t, "t");
    require_alpha(problem, alpha);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < problem.pixels.cols(); ++i)
        sum += (problem.pixels.col(i) - b - alpha[i] * t).squaredNorm();
    return sum / static_cast<double>(problem.pixels.cols());
}

Eigen::VectorXd update_alpha(const IbateProblem& problem, const Spectrum& b, const Spectrum& t) {
    require_channels(problem, b, "b");
    require_channels(problem, t, "t");
    const double tt = t.squaredNorm();
    if (!(tt > 0.0)) throw std::invalid_argument("update_alpha: target spectrum is zero");
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(problem.pixels.cols());
    for (Eigen::Index i = 0; i < problem.pixels.cols(); ++i) {
        if (problem.clean[static_cast<std::size_t>(i)]) continue;
        alpha[i] = std::max(0.0, (problem.pixels.col(i) - b).dot(t) / tt);
    }
    return alpha;
}

Spectrum update_background(const IbateProblem& problem, const Spectrum& t, const Eigen::VectorXd& alpha) {
    require_channels(problem, t, "t");
    require_alpha(problem, alpha);
    Spectrum b = Spectrum::Zero(problem.pixels.rows());
    for (Eigen::Index i = 0; i < problem.pixels.cols(); ++i) b += problem.pixels.col(i) - alpha[i] * t;
    return b / static_cast<double>(problem.pixels.cols());
}

Spectrum update_target(const IbateProblem& problem, const Spectrum& b, const Eigen::VectorXd& alpha) {
    require_channels(problem, b, "b");
    require_alpha(problem, alpha);
    const double aa = alpha.squaredNorm();
    if (!(aa > 0.0)) throw std::invalid_argument("update_target: every alpha is zero, no signal to estimate");
    Spectrum t = Spectrum::Zero(problem.pixels.rows());
    for (Eigen::Index i = 0; i < problem.pixels.cols(); ++i)
        if (alpha[i] != 0.0) t += alpha[i] * (problem.pixels.col(i) - b);
    return t / aa;
}

AdditiveFit run_ibate(const IbateProblem& problem, const IbateOptions& options) {
    problem.validate();
    if (problem.size() < 2) throw std::invalid_argument("iBATE needs at least two pixels");
    if (options.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(options.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");

    // Objective values below this are round-off for data of this magnitude.
    const double floor = 1e-20 * problem.pixels.colwise().squaredNorm().mean();

    AdditiveFit fit;
    fit.b = problem.init_b;
    fit.t = problem.init_t;
    fit.alpha = problem.init_alpha;
    double previous = objective(problem, fit.b, fit.t, fit.alpha);

    if (problem.free_count() == 0) {
        fit.alpha.setZero();
        fit.b = update_background(problem, fit.t, fit.alpha);
        fit.objective_trace.push_back(objective(problem, fit.b, fit.t, fit.alpha));
        fit.iterations = 1;
        fit.converged = true;
        return fit;
    }

    auto collapse = [&] {
        fit.alpha.setZero();
        fit.t = Spectrum::Zero(problem.pixels.rows());
        fit.b = update_background(problem, fit.t, fit.alpha);
        fit.objective_trace.push_back(objective(problem, fit.b, fit.t, fit.alpha));
        fit.iterations = fit.objective_trace.size();
        fit.collapsed = true;
        fit.converged = true;
    };

    if (fit.t.squaredNorm() == 0.0) {
        collapse();
        return fit;
    }

    for (std::size_t it = 0; it < options.max_iter; ++it) {
        Eigen::VectorXd alpha = update_alpha(problem, fit.b, fit.t);
        if (alpha.squaredNorm() == 0.0) {
            collapse();
            return fit;
        }
        Spectrum b = update_background(problem, fit.t, alpha);
        Spectrum t = update_target(problem, b, alpha);
        if (t.squaredNorm() == 0.0) {
            collapse();
            return fit;
        }
        const double current = objective(problem, b, t, alpha);
        if (current > previous) {
            fit.converged = true;
            break;
        }
        fit.b = std::move(b);
        fit.t = std::move(t);
        fit.alpha = std::move(alpha);
        fit.objective_trace.push_back(current);
        if (current <= floor || previous - current <= options.rel_tol * previous) {
            fit.converged = true;
            break;
        }
        previous = current;
    }
    fit.iterations = fit.objective_trace.size();
    return fit;
}

nlohmann::json to_json(const AdditiveFit& fit) {
    return {{"b", vec(fit.b)},
            {"t", vec(fit.t)},
            {"alpha", vec(fit.alpha)},
            {"objective_trace", fit.objective_trace},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"collapsed", fit.collapsed}};
}

}  // namespace lebeaus
