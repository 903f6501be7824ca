#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "ibate_oracle.hpp"
#include "lebeaus/ibate.hpp"
#include "test_support.hpp"

using namespace lebeaus;

namespace {

IbateProblem problem_from(const Eigen::MatrixXd& y, std::vector<std::uint8_t> clean) {
    return make_ibate_problem(y, std::move(clean), Spectrum(y.rowwise().mean()));
}

// y_i = b + alpha_i t with the first n_clean pixels clean.
struct Exact {
    Spectrum b, t;
    Eigen::VectorXd alpha;
    Eigen::MatrixXd y;
    std::vector<std::uint8_t> clean;
};

Exact exact_instance(std::size_t c, std::size_t n, std::size_t n_clean, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ua(0.2, 2.0);
    Exact e;
    e.b = lebeaus::testing::random_spectrum(c, rng, 5, 10);
    e.t = lebeaus::testing::random_spectrum(c, rng, -1, 1);
    e.alpha = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    e.clean.assign(n, 0);
    e.y.resize(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        if (i < n_clean)
            e.clean[i] = 1;
        else
            e.alpha[ii] = ua(rng);
        e.y.col(ii) = e.b + e.alpha[ii] * e.t;
    }
    return e;
}

double direct_objective(const Eigen::MatrixXd& y, const Spectrum& b, const Spectrum& t, const Eigen::VectorXd& a) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < y.cols(); ++i)
        for (Eigen::Index k = 0; k < y.rows(); ++k) {
            const double r = y(k, i) - b[k] - a[i] * t[k];
            s += r * r;
        }
    return s / static_cast<double>(y.cols());
}

}  // namespace

TEST_CASE("objective examples") {
    std::mt19937_64 rng(1);
    const Exact e = exact_instance(4, 6, 2, rng);
    const IbateProblem p = problem_from(e.y, e.clean);
    CHECK(objective(p, e.b, e.t, e.alpha) < 1e-24);

    const Eigen::VectorXd any = Eigen::VectorXd::Constant(6, 3.7);
    double expect = 0.0;
    for (Eigen::Index i = 0; i < 6; ++i) expect += (e.y.col(i) - e.b).squaredNorm();
    CHECK(objective(p, e.b, Spectrum::Zero(4), any) == doctest::Approx(expect / 6).epsilon(1e-14));

    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd y = Eigen::MatrixXd::Random(3, 5);
        const IbateProblem q = problem_from(y, {1, 0, 0, 0, 0});
        const Spectrum b = lebeaus::testing::random_spectrum(3, rng), t = lebeaus::testing::random_spectrum(3, rng);
        const Eigen::VectorXd a = (Eigen::VectorXd::Random(5).array() + 1.0).matrix();
        CHECK(objective(q, b, t, a) == doctest::Approx(direct_objective(y, b, t, a)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(objective(p, Spectrum::Zero(3), e.t, e.alpha), std::invalid_argument);
}

TEST_CASE("update_alpha projects, clamps and respects clean pixels") {
    Spectrum b(2), t(2);
    b << 1.0, 2.0;
    t << 0.5, -1.0;
    Eigen::MatrixXd y(2, 4);
    y.col(0) = b;
    y.col(1) = b + 2.0 * t;
    y.col(2) = b - t;
    y.col(3) = b + 5.0 * t;  // clean: stays at zero
    const IbateProblem p = make_ibate_problem(y, {0, 0, 0, 1});
    const Eigen::VectorXd a = update_alpha(p, b, t);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a[2] == 0.0);
    CHECK(a[3] == 0.0);
    CHECK_THROWS_AS(update_alpha(p, b, Spectrum::Zero(2)), std::invalid_argument);
}

TEST_CASE("update_background examples") {
    std::mt19937_64 rng(2);
    const Exact e = exact_instance(5, 8, 3, rng);
    const IbateProblem p = problem_from(e.y, e.clean);
    CHECK(update_background(p, e.t, Eigen::VectorXd::Zero(8)).isApprox(Spectrum(e.y.rowwise().mean()), 1e-14));
    CHECK(update_background(p, e.t, e.alpha).isApprox(e.b, 1e-13));

    // single pixel: y = 5, alpha = 1, t = 2 gives b = 3
    IbateProblem one;
    one.pixels = Eigen::MatrixXd::Constant(1, 1, 5.0);
    one.clean = {0};
    CHECK(update_background(one, Spectrum::Constant(1, 2.0), Eigen::VectorXd::Constant(1, 1.0))[0] == 3.0);
}

TEST_CASE("update_target examples") {
    std::mt19937_64 rng(3);
    const Exact e = exact_instance(5, 8, 3, rng);
    const IbateProblem p = problem_from(e.y, e.clean);
    CHECK(update_target(p, e.b, e.alpha).isApprox(e.t, 1e-12));

    IbateProblem one;
    one.pixels.resize(3, 1);
    const Spectrum b = lebeaus::testing::random_spectrum(3, rng), t0 = lebeaus::testing::random_spectrum(3, rng);
    one.pixels.col(0) = b + 3.0 * t0;
    one.clean = {0};
    CHECK(update_target(one, b, Eigen::VectorXd::Constant(1, 3.0)).isApprox(t0, 1e-14));
    CHECK_THROWS_AS(update_target(p, e.b, Eigen::VectorXd::Zero(8)), std::invalid_argument);
}

TEST_CASE("initialization from clean and contaminated pixels") {
    Eigen::MatrixXd y(2, 4);
    y << 1, 3, 10, 20, 2, 4, 30, 40;
    const IbateProblem p = make_ibate_problem(y, {1, 1, 0, 0});
    CHECK(p.init_b == Spectrum((Spectrum(2) << 2, 3).finished()));
    CHECK(p.init_t == Spectrum((Spectrum(2) << 13, 32).finished()));
    CHECK(p.init_alpha == (Eigen::VectorXd(4) << 0, 0, 1, 1).finished());

    Spectrum mu(2);
    mu << 7, 8;
    const IbateProblem q = make_ibate_problem(y, {0, 0, 0, 0}, mu);
    CHECK(q.init_b == mu);
    CHECK(q.init_t == Spectrum(y.rowwise().mean() - mu));
    CHECK_THROWS_AS(make_ibate_problem(y, {0, 0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(make_ibate_problem(y, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("noise-free instances converge to zero objective quickly") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const Exact e = exact_instance(32, 200, 60, rng);
        const AdditiveFit fit = run_ibate(problem_from(e.y, e.clean));
        CHECK(fit.converged);
        CHECK_FALSE(fit.collapsed);
        CHECK(fit.iterations <= 10);
        REQUIRE_FALSE(fit.objective_trace.empty());
        CHECK(fit.objective_trace.back() < 1e-10);
        CHECK(fit.b.isApprox(e.b, 1e-9));
    }
}

TEST_CASE("all pixels clean: b is the clean mean, t untouched, one sweep") {
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(3, 6);
    IbateProblem p = make_ibate_problem(y, std::vector<std::uint8_t>(6, 1));
    p.init_t = Spectrum::Constant(3, 0.25);
    const AdditiveFit fit = run_ibate(p);
    CHECK(fit.b.isApprox(Spectrum(y.rowwise().mean()), 1e-14));
    CHECK(fit.t == p.init_t);
    CHECK(fit.alpha.isZero(0.0));
    CHECK(fit.iterations == 1);
    CHECK(fit.converged);
}

TEST_CASE("collapse when no pixel carries signal") {
    // contaminated mean equals the clean mean, so the initial target is zero
    Eigen::MatrixXd y(1, 4);
    y << 1.0, 1.0, 1.0, 1.0;
    const AdditiveFit fit = run_ibate(make_ibate_problem(y, {1, 1, 0, 0}));
    CHECK(fit.collapsed);
    CHECK(fit.converged);
    CHECK(fit.t.isZero(0.0));
    CHECK(fit.alpha.isZero(0.0));
    CHECK(fit.b[0] == 1.0);
}

TEST_CASE("objective trace never increases and every sub-update is a descent step") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int trial = 0; trial < 50; ++trial) {
        Exact e = exact_instance(1 + rng() % 10, 5 + rng() % 40, 1 + rng() % 4, rng);
        for (Eigen::Index i = 0; i < e.y.size(); ++i) e.y.data()[i] += g(rng);
        const IbateProblem p = problem_from(e.y, e.clean);
        const AdditiveFit fit = run_ibate(p);
        for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
            CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1]);
        for (Eigen::Index i = 0; i < fit.alpha.size(); ++i) {
            CHECK(fit.alpha[i] >= 0.0);
            if (e.clean[static_cast<std::size_t>(i)]) CHECK(fit.alpha[i] == 0.0);
        }

        Spectrum b = p.init_b, t = p.init_t;
        Eigen::VectorXd a = p.init_alpha;
        double f = objective(p, b, t, a);
        const double slack = 1e-12 * (1.0 + f);
        for (int sweep = 0; sweep < 5 && t.squaredNorm() > 0.0; ++sweep) {
            a = update_alpha(p, b, t);
            const double fa = objective(p, b, t, a);
            CHECK(fa <= f + slack);
            if (a.squaredNorm() == 0.0) break;
            b = update_background(p, t, a);
            const double fb = objective(p, b, t, a);
            CHECK(fb <= fa + slack);
            t = update_target(p, b, a);
            const double ft = objective(p, b, t, a);
            CHECK(ft <= fb + slack);
            f = ft;
        }
    }
}

TEST_CASE("an exact fit is a fixed point of one sweep") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const Exact e = exact_instance(6, 12, 4, rng);
        const IbateProblem p = problem_from(e.y, e.clean);
        const Eigen::VectorXd a = update_alpha(p, e.b, e.t);
        const Spectrum b = update_background(p, e.t, a);
        const Spectrum t = update_target(p, b, a);
        CHECK((a - e.alpha).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((b - e.b).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((t - e.t).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("objective is invariant under the (t, alpha) scale gauge") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd y = Eigen::MatrixXd::Random(4, 7);
        const IbateProblem p = problem_from(y, {1, 0, 0, 0, 0, 0, 0});
        const Spectrum b = lebeaus::testing::random_spectrum(4, rng), t = lebeaus::testing::random_spectrum(4, rng);
        Eigen::VectorXd a = (Eigen::VectorXd::Random(7).array() + 1.0).matrix();
        a[0] = 0.0;
        for (double s : {0.1, 0.5, 3.0, 1e3}) {
            const double f0 = objective(p, b, t, a), f1 = objective(p, b, s * t, a / s);
            CHECK(f1 == doctest::Approx(f0).epsilon(1e-12));
        }
    }
}

TEST_CASE("run_ibate reaches the lattice minimum on tiny problems") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const std::size_t c = 1 + seed % 2, n = 3 + seed % 2;
        const auto inst = lebeaus::testing::make_tiny_instance(c, n, 1, 0.05, 100 + seed);
        const AdditiveFit fit = run_ibate(make_ibate_problem(inst.y, inst.clean));
        const double f = fit.objective_trace.empty() ? objective(make_ibate_problem(inst.y, inst.clean), fit.b, fit.t, fit.alpha)
                                                     : fit.objective_trace.back();
        const auto lat = lebeaus::testing::lattice_minimum(inst.y, inst.clean, inst.b_true, inst.t_true, 0.6,
                                                           c == 1 ? 121 : 25, 3.0, 301);
        CHECK(f <= lat.minimum + lat.resolution_bound);
    }
}

TEST_CASE("run_ibate argument checks and JSON") {
    const Eigen::MatrixXd y = Eigen::MatrixXd::Random(2, 3);
    IbateProblem p = make_ibate_problem(y, {1, 0, 0});
    CHECK_THROWS_AS(run_ibate(p, {0, 1e-8}), std::invalid_argument);
    CHECK_THROWS_AS(run_ibate(p, {10, 0.0}), std::invalid_argument);
    IbateProblem single = make_ibate_problem(y.leftCols(1), {1});
    CHECK_THROWS_AS(run_ibate(single), std::invalid_argument);
    p.init_alpha[0] = 1.0;
    CHECK_THROWS_AS(run_ibate(p), std::invalid_argument);

    const AdditiveFit fit = run_ibate(make_ibate_problem(y, {1, 0, 0}));
    const nlohmann::json j = to_json(fit);
    CHECK(j.at("b").size() == 2);
    CHECK(j.at("alpha").size() == 3);
    CHECK(j.at("iterations").get<std::size_t>() == fit.iterations);
    CHECK(j.at("objective_trace").size() == fit.objective_trace.size());
}
