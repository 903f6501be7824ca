#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "lebeaus/io.hpp"
#include "lebeaus/pipeline.hpp"
#include "lebeaus/scene.hpp"
#include "scenes.hpp"
#include "test_support.hpp"

using namespace lebeaus;

namespace {

const SyntheticScene& plume_scene() {
    static const SyntheticScene s = simulate(lebeaus::testing::small_plume_config());
    return s;
}

// Single material, flat temperature, noise only.
HsiCube uniform_cube(std::uint64_t seed) {
    SceneConfig cfg;
    cfg.rows = 20;
    cfg.cols = 20;
    cfg.wavelengths = linear_wavelengths(8, 12, 8);
    cfg.seed = seed;
    cfg.noise_sigma = 0.05;
    MaterialConfig m;
    m.name = "flat";
    m.regions = {{0, 0, 20, 20}};
    cfg.materials = {m};
    return synth_scene(cfg).cube;
}

PixelMask block_roi(std::size_t rows, std::size_t cols, std::size_t r0, std::size_t c0, std::size_t h, std::size_t w) {
    PixelMask m(rows, cols);
    for (std::size_t r = r0; r < r0 + h; ++r)
        for (std::size_t c = c0; c < c0 + w; ++c) m.set(r, c);
    return m;
}

Spectrum mean_of(const HsiCube& cube, const std::vector<std::size_t>& pixels) {
    Spectrum s = Spectrum::Zero(static_cast<Eigen::Index>(cube.channels()));
    for (std::size_t p : pixels) s += cube.pixel(p);
    return s / static_cast<double>(pixels.size());
}

}  // namespace

TEST_CASE("single material with iBATE off: each background is its gathered clean mean") {
    const HsiCube cube = uniform_cube(3);
    const PixelMask roi = block_roi(20, 20, 6, 6, 5, 5);
    LebeausConfig cfg;
    cfg.ibate_enabled = false;
    const LocalWhitenResult local = lebeaus_run(cube, roi, cfg);
    REQUIRE(local.pixels.size() == roi.count());

    const SceneContext ctx = prepare_scene(cube, roi, cfg.ridge_scale, cfg.pairs_removed, cfg.seed);
    for (const SegmentEstimate& seg : local.segments) {
        const PlumeSegment& ps = *std::find_if(ctx.plume_segments.begin(), ctx.plume_segments.end(),
                                               [&](const PlumeSegment& p) { return p.label == seg.label; });
        std::vector<std::size_t> clean = ps.clean_pixels;
        for (int d : seg.donors) {
            const auto& px = ctx.segments.segment(d).pixels;
            clean.insert(clean.end(), px.begin(), px.end());
        }
        CHECK(clean.size() == seg.own_clean_pixels + seg.donor_pixels);
        REQUIRE_FALSE(seg.fallback);
        CHECK(seg.background.isApprox(mean_of(cube, clean), 1e-12));
        CHECK_FALSE(seg.fit.has_value());
    }
}

TEST_CASE("local and global whitening differ exactly by the whitened background gap") {
    const SyntheticScene& s = plume_scene();
    const LocalWhitenResult local = lebeaus_run(s.cube, s.roi(), LebeausConfig{});
    const LocalWhitenResult global = global_baseline(s.cube, s.roi());
    REQUIRE(local.pixels.size() == global.pixels.size());
    for (std::size_t i = 0; i < local.pixels.size(); ++i) {
        const auto& a = local.pixels[i];
        const auto& g = global.pixels[i];
        CHECK(a.pixel == g.pixel);
        const Spectrum expect = local.transform.inv_sqrt * (global.stats.mean - a.background);
        CHECK((a.whitened - g.whitened - expect).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("global baseline matches a direct computation") {
    const SyntheticScene& s = plume_scene();
    const LocalWhitenResult g = global_baseline(s.cube, s.roi(), 1e-6);
    CHECK(g.method == "global");
    // mean over non-ROI pixels, accumulated here independently
    Spectrum mu = Spectrum::Zero(16);
    std::size_t n = 0;
    for (std::size_t p = 0; p < s.cube.pixel_count(); ++p)
        if (!s.roi()[p]) {
            mu += s.cube.pixel(p);
            ++n;
        }
    mu /= static_cast<double>(n);
    CHECK(g.stats.mean.isApprox(mu, 1e-12));
    for (const auto& pe : g.pixels) {
        CHECK(s.roi()[pe.pixel]);
        const Spectrum z = g.transform.inv_sqrt * (s.cube.pixel(pe.pixel) - mu);
        CHECK((pe.whitened - z).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("ROI pixels are covered exactly once, in ascending order") {
    const SyntheticScene& s = plume_scene();
    for (bool ib : {true, false}) {
        LebeausConfig cfg;
        cfg.ibate_enabled = ib;
        const LocalWhitenResult r = lebeaus_run(s.cube, s.roi(), cfg);
        std::set<std::size_t> seen;
        std::size_t prev = 0;
        for (std::size_t i = 0; i < r.pixels.size(); ++i) {
            CHECK(seen.insert(r.pixels[i].pixel).second);
            CHECK(s.roi()[r.pixels[i].pixel]);
            if (i > 0) CHECK(r.pixels[i].pixel > prev);
            prev = r.pixels[i].pixel;
            CHECK(r.pixels[i].alpha >= 0.0);
            const Spectrum z = whiten(r.pixels[i].observed, r.pixels[i].background, r.transform);
            CHECK(r.pixels[i].whitened == z);
        }
        CHECK(seen.size() == s.roi().count());
        std::size_t total = 0;
        for (const auto& seg : r.segments) total += seg.roi_pixels;
        CHECK(total == s.roi().count());
    }
}

TEST_CASE("lebeaus_run is deterministic") {
    const SyntheticScene& s = plume_scene();
    const LocalWhitenResult a = lebeaus_run(s.cube, s.roi(), LebeausConfig{});
    const LocalWhitenResult b = lebeaus_run(s.cube, s.roi(), LebeausConfig{});
    REQUIRE(a.pixels.size() == b.pixels.size());
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        CHECK(a.pixels[i].whitened == b.pixels[i].whitened);
        CHECK(a.pixels[i].alpha == b.pixels[i].alpha);
    }
}

TEST_CASE("MSE examples") {
    const SyntheticScene& s = plume_scene();
    LocalWhitenResult r = global_baseline(s.cube, s.roi());
    const std::size_t c = s.cube.channels();

    SUBCASE("true background gives zero") {
        for (auto& pe : r.pixels) {
            pe.background = s.truth.background.pixel(pe.pixel);
            pe.whitened = whiten(pe.observed, pe.background, r.transform);
        }
        CHECK(evaluate_mse(r, s.truth, r.transform) < 1e-24);
    }
    SUBCASE("constant offset d gives |W d|^2 / c") {
        Spectrum d(static_cast<Eigen::Index>(c));
        for (std::size_t k = 0; k < c; ++k) d[static_cast<Eigen::Index>(k)] = 0.01 * std::sin(static_cast<double>(k));
        for (auto& pe : r.pixels) {
            pe.background = s.truth.background.pixel(pe.pixel) + d;
            pe.whitened = whiten(pe.observed, pe.background, r.transform);
        }
        const double expect = (r.transform.inv_sqrt * d).squaredNorm() / static_cast<double>(c);
        CHECK(evaluate_mse(r, s.truth, r.transform) == doctest::Approx(expect).epsilon(1e-9));
    }
    SUBCASE("mismatched truth") {
        SimulationTruth t = s.truth;
        t.background = HsiCube(4, 4, s.cube.wavelengths());
        CHECK_THROWS_AS(evaluate_mse(r, t, r.transform), std::invalid_argument);
    }
}

TEST_CASE("plume over two materials: local whitening beats global") {
    // A low mask threshold keeps the plume tail out of the clean segments;
    // whitening amplifies any gas left in the donors.
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        CAPTURE(seed);
        const SyntheticScene s = simulate(lebeaus::testing::small_plume_config(seed));
        CHECK(s.roi().count() > 20);
        std::set<int> materials;
        for (std::size_t p : s.roi().indices()) materials.insert(s.atmo.material[p]);
        CHECK(materials.size() == 2);

        const LocalWhitenResult g = global_baseline(s.cube, s.roi());
        const double global_mse = evaluate_mse(g, s.truth, g.transform);
        for (bool ib : {true, false}) {
            CAPTURE(ib);
            LebeausConfig cfg;
            cfg.ibate_enabled = ib;
            const LocalWhitenResult l = lebeaus_run(s.cube, s.roi(), cfg);
            CHECK(evaluate_mse(l, s.truth, l.transform) < global_mse);
        }
    }
}

TEST_CASE("plume over the minority material: local whitening beats global") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        CAPTURE(seed);
        const SyntheticScene s = simulate(lebeaus::testing::minority_plume_config(seed));
        REQUIRE(s.roi().count() > 50);
        for (std::size_t p : s.roi().indices()) CHECK(s.atmo.material[p] == 1);
        const LocalWhitenResult g = global_baseline(s.cube, s.roi());
        const double global_mse = evaluate_mse(g, s.truth, g.transform);
        for (bool ib : {true, false}) {
            CAPTURE(ib);
            LebeausConfig cfg;
            cfg.ibate_enabled = ib;
            const LocalWhitenResult l = lebeaus_run(s.cube, s.roi(), cfg);
            CHECK(evaluate_mse(l, s.truth, l.transform) < 0.9 * global_mse);
        }
    }
}

TEST_CASE("precondition failures") {
    const HsiCube cube = uniform_cube(1);
    CHECK_THROWS_AS(lebeaus_run(cube, PixelMask(20, 20), LebeausConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(lebeaus_run(cube, PixelMask(20, 20, true), LebeausConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(lebeaus_run(cube, PixelMask(10, 20), LebeausConfig{}), std::invalid_argument);
    LebeausConfig bad;
    bad.similarity.gamma = 1.5;
    CHECK_THROWS_AS(lebeaus_run(cube, block_roi(20, 20, 0, 0, 2, 2), bad), std::invalid_argument);
}

TEST_CASE("config JSON round trip and validation") {
    LebeausConfig cfg;
    cfg.similarity = {0.3, 0.6, 64};
    cfg.ibate_enabled = false;
    cfg.ibate.max_iter = 7;
    cfg.ridge_scale = 1e-5;
    cfg.pairs_removed = 2;
    cfg.seed = 99;
    const LebeausConfig back = LebeausConfig::from_json(cfg.to_json());
    CHECK(back.similarity.gamma == 0.3);
    CHECK(back.similarity.beta == 0.6);
    CHECK(back.similarity.min_k == 64);
    CHECK_FALSE(back.ibate_enabled);
    CHECK(back.ibate.max_iter == 7);
    CHECK(back.ridge_scale == 1e-5);
    CHECK(back.pairs_removed == 2);
    CHECK(back.seed == 99);

    const LebeausConfig defaults = LebeausConfig::from_json(nlohmann::json::object());
    CHECK(defaults.similarity.gamma == 0.2);
    CHECK(defaults.similarity.min_k == 16);
    CHECK_THROWS_AS(LebeausConfig::from_json({{"pairs_removed", 9}}), std::invalid_argument);
    CHECK_THROWS_AS(LebeausConfig::from_json({{"min_k", 0}}), std::invalid_argument);
}

TEST_CASE("result directory round trip") {
    lebeaus::testing::TempDir dir("result");
    const SyntheticScene& s = plume_scene();
    const LocalWhitenResult r = lebeaus_run(s.cube, s.roi(), LebeausConfig{});
    save_result(r, dir.path(), LebeausConfig{});
    for (const char* f : {"pixels.csv", "transform.csv", "mean.csv", "covariance.csv", "segments.json", "summary.json"})
        CHECK(std::filesystem::exists(dir / f));
    const LocalWhitenResult back = load_result(dir.path());
    CHECK(back.method == "lebeaus");
    REQUIRE(back.pixels.size() == r.pixels.size());
    for (std::size_t i = 0; i < r.pixels.size(); ++i) {
        CHECK(back.pixels[i].pixel == r.pixels[i].pixel);
        CHECK(back.pixels[i].whitened == r.pixels[i].whitened);
        CHECK(back.pixels[i].background == r.pixels[i].background);
    }
    CHECK(back.transform.inv_sqrt == r.transform.inv_sqrt);
    CHECK(evaluate_mse(back, s.truth, back.transform) == evaluate_mse(r, s.truth, r.transform));

    std::ifstream in(dir / "segments.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.size() == r.segments.size());
}
