#include "lebeaus/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lebeaus/io.hpp"

namespace lebeaus {

namespace fs = std::filesystem;
using nlohmann::json;

void LebeausConfig::validate() const {
    similarity.validate();
    if (ibate.max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
    if (!(ibate.rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
    if (!(ridge_scale >= 0.0)) throw std::invalid_argument("ridge_scale must be >= 0");
    if (pairs_removed < 0 || pairs_removed > kMaxPairsRemoved)
        throw std::invalid_argument("pairs_removed out of range");
}

LebeausConfig LebeausConfig::from_json(const json& j) {
    LebeausConfig c;
    c.similarity.gamma = j.value("gamma", c.similarity.gamma);
    c.similarity.beta = j.value("beta", c.similarity.beta);
    c.similarity.min_k = j.value("min_k", c.similarity.min_k);
    c.ibate_enabled = j.value("ibate", c.ibate_enabled);
    c.ibate.max_iter = j.value("max_iter", c.ibate.max_iter);
    c.ibate.rel_tol = j.value("rel_tol", c.ibate.rel_tol);
    c.ridge_scale = j.value("ridge_scale", c.ridge_scale);
    c.pairs_removed = j.value("pairs_removed", c.pairs_removed);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

LebeausConfig LebeausConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

json LebeausConfig::to_json() const {
    return {{"gamma", similarity.gamma},       {"beta", similarity.beta},   {"min_k", similarity.min_k},
            {"ibate", ibate_enabled},          {"max_iter", ibate.max_iter}, {"rel_tol", ibate.rel_tol},
            {"ridge_scale", ridge_scale},      {"pairs_removed", pairs_removed}, {"seed", seed}};
}

SceneContext prepare_scene(const HsiCube& cube, const PixelMask& roi, double ridge_scale, int pairs_removed,
                           std::uint64_t seed) {
    if (!roi.matches(cube)) throw std::invalid_argument("ROI mask dimensions do not match the cube");
    if (roi.count() == 0) throw std::invalid_argument("ROI is empty");
    if (roi.count() == cube.pixel_count()) throw std::invalid_argument("ROI covers the whole scene; no clean pixels");
    SceneContext ctx;
    ctx.rows = cube.rows();
    ctx.cols = cube.cols();
    ctx.wavelengths = cube.wavelengths();
    ctx.pixels = cube.pixel_matrix();
    ctx.roi = roi;
    ctx.seed = seed;
    ctx.stats = global_stats(cube, roi);
    ctx.transform = inverse_sqrt(ctx.stats, ridge_scale);
    ctx.segments = segment_stats(cube, watershed(spectral_gradient(cube, pairs_removed)));
    const auto overlap = roi_overlap(ctx.segments, roi);
    for (std::size_t i = 0; i < overlap.size(); ++i) {
        const int label = static_cast<int>(i + 1);
        if (overlap[i] > 0)
            ctx.plume_segments.push_back(split_plume_segment(ctx.segments, roi, label));
        else
            ctx.clean_labels.push_back(label);
    }
    return ctx;
}

std::vector<std::vector<RankedSegment>> rank_for_segment_multi(const SceneContext& ctx, const PlumeSegment& plume,
                                                               double gamma, std::span<const double> betas) {
    if (ctx.clean_labels.empty()) return std::vector<std::vector<RankedSegment>>(betas.size());
    const auto& target_pixels = plume.roi_pixels.empty() ? plume.clean_pixels : plume.roi_pixels;
    const Eigen::MatrixXd target = gather_columns(ctx.pixels, target_pixels, kTalSubsampleCap, ctx.seed, -plume.label);
    return rank_candidate_segments_multi(target, ctx.pixels, ctx.segments, ctx.clean_labels, gamma, betas, ctx.seed);
}

std::vector<RankedSegment> rank_for_segment(const SceneContext& ctx, const PlumeSegment& plume,
                                            const SimilarityParams& params) {
    params.validate();
    const double betas[] = {params.beta};
    return std::move(rank_for_segment_multi(ctx, plume, params.gamma, betas)[0]);
}

namespace {

Spectrum column_mean(const Eigen::MatrixXd& pixels, std::span<const std::size_t> indices) {
    Spectrum s = Spectrum::Zero(pixels.rows());
    for (std::size_t p : indices) s += pixels.col(static_cast<Eigen::Index>(p));
    return s / static_cast<double>(indices.size());
}

void finish_result(LocalWhitenResult& r) {
    std::sort(r.pixels.begin(), r.pixels.end(),
              [](const PixelEstimate& a, const PixelEstimate& b) { return a.pixel < b.pixel; });
    r.mean_whitened = Spectrum::Zero(static_cast<Eigen::Index>(r.wavelengths.size()));
    for (const auto& p : r.pixels) r.mean_whitened += p.whitened;
    if (!r.pixels.empty()) r.mean_whitened /= static_cast<double>(r.pixels.size());
}

LocalWhitenResult empty_result(const SceneContext& ctx, std::string method) {
    LocalWhitenResult r;
    r.method = std::move(method);
    r.rows = ctx.rows;
    r.cols = ctx.cols;
    r.wavelengths = ctx.wavelengths;
    r.stats = ctx.stats;
    r.transform = ctx.transform;
    return r;
}

}  // namespace

LocalWhitenResult estimate_local(const SceneContext& ctx, const LebeausConfig& config, const RankingProvider& rank) {
    config.validate();
    LocalWhitenResult result = empty_result(ctx, "lebeaus");
    result.pixels.reserve(ctx.roi.count());

    for (const PlumeSegment& plume : ctx.plume_segments) {
        SegmentEstimate seg;
        seg.label = plume.label;
        seg.roi_pixels = plume.roi_pixels.size();
        seg.own_clean_pixels = plume.clean_pixels.size();

        std::optional<CleanPixelSet> clean;
        try {
            clean = gather_from_ranking(plume, ctx.segments, rank(plume), config.similarity.min_k);
        } catch (const std::runtime_error& e) {
            seg.fallback = true;
            seg.note = e.what();
        }

        std::vector<double> alpha(plume.roi_pixels.size(), 0.0);
        if (!clean) {
            seg.background = ctx.stats.mean;
        } else {
            seg.donors = clean->donors;
            seg.donor_pixels = clean->donor_pixel_count();
            const Spectrum clean_mean = column_mean(ctx.pixels, clean->pixels);
            seg.background = clean_mean;
            if (config.ibate_enabled) {
                const std::size_t n_roi = plume.roi_pixels.size();
                Eigen::MatrixXd y(ctx.pixels.rows(), static_cast<Eigen::Index>(n_roi + clean->pixels.size()));
                std::vector<std::uint8_t> is_clean(static_cast<std::size_t>(y.cols()), 1);
                for (std::size_t i = 0; i < n_roi; ++i) {
                    y.col(static_cast<Eigen::Index>(i)) = ctx.pixels.col(static_cast<Eigen::Index>(plume.roi_pixels[i]));
                    is_clean[i] = 0;
                }
                for (std::size_t i = 0; i < clean->pixels.size(); ++i)
                    y.col(static_cast<Eigen::Index>(n_roi + i)) =
                        ctx.pixels.col(static_cast<Eigen::Index>(clean->pixels[i]));
                try {
                    AdditiveFit fit = run_ibate(make_ibate_problem(std::move(y), std::move(is_clean)), config.ibate);
                    if (fit.collapsed) {
                        seg.fallback = true;
                        seg.note = "iBATE found no signal; using the clean-pixel mean";
                    } else {
                        seg.background = fit.b;
                        for (std::size_t i = 0; i < n_roi; ++i) alpha[i] = fit.alpha[static_cast<Eigen::Index>(i)];
                    }
                    seg.fit = std::move(fit);
                } catch (const std::invalid_argument& e) {
                    seg.fallback = true;
                    seg.note = std::string("iBATE failed: ") + e.what();
                }
            }
        }

        seg.mean_whitened = Spectrum::Zero(ctx.pixels.rows());
        for (std::size_t i = 0; i < plume.roi_pixels.size(); ++i) {
            PixelEstimate pe;
            pe.pixel = plume.roi_pixels[i];
            pe.segment = plume.label;
            pe.observed = ctx.pixels.col(static_cast<Eigen::Index>(pe.pixel));
            pe.background = seg.background;
            pe.whitened = whiten(pe.observed, pe.background, ctx.transform);
            pe.alpha = alpha[i];
            seg.mean_whitened += pe.whitened;
            result.pixels.push_back(std::move(pe));
        }
        seg.mean_whitened /= static_cast<double>(plume.roi_pixels.size());
        result.segments.push_back(std::move(seg));
    }
    finish_result(result);
    return result;
}

LocalWhitenResult lebeaus_run(const HsiCube& cube, const PixelMask& roi, const LebeausConfig& config) {
    config.validate();
    const SceneContext ctx = prepare_scene(cube, roi, config.ridge_scale, config.pairs_removed, config.seed);
    return estimate_local(ctx, config,
                          [&](const PlumeSegment& ps) { return rank_for_segment(ctx, ps, config.similarity); });
}

LocalWhitenResult global_baseline(const SceneContext& ctx) {
    LocalWhitenResult result = empty_result(ctx, "global");
    for (std::size_t p : ctx.roi.indices()) {
        PixelEstimate pe;
        pe.pixel = p;
        pe.observed = ctx.pixels.col(static_cast<Eigen::Index>(p));
        pe.background = ctx.stats.mean;
        pe.whitened = whiten(pe.observed, pe.background, ctx.transform);
        result.pixels.push_back(std::move(pe));
    }
    finish_result(result);
    return result;
}

LocalWhitenResult global_baseline(const HsiCube& cube, const PixelMask& roi, double ridge_scale) {
    if (!roi.matches(cube)) throw std::invalid_argument("ROI mask dimensions do not match the cube");
    if (roi.count() == 0) throw std::invalid_argument("ROI is empty");
    SceneContext ctx;
    ctx.rows = cube.rows();
    ctx.cols = cube.cols();
    ctx.wavelengths = cube.wavelengths();
    ctx.pixels = cube.pixel_matrix();
    ctx.roi = roi;
    ctx.stats = global_stats(cube, roi);
    ctx.transform = inverse_sqrt(ctx.stats, ridge_scale);
    return global_baseline(ctx);
}

double evaluate_mse(const LocalWhitenResult& result, const SimulationTruth& truth, const WhiteningTransform& transform) {
    if (result.pixels.empty()) throw std::invalid_argument("evaluate_mse: result has no ROI pixels");
    const HsiCube& bg = truth.background;
    if (bg.rows() != result.rows || bg.cols() != result.cols || bg.channels() != result.wavelengths.size())
        throw std::invalid_argument("evaluate_mse: truth does not cover the result's scene");
    double sum = 0.0;
    for (const auto& pe : result.pixels) {
        if (pe.pixel >= bg.pixel_count()) throw std::invalid_argument("evaluate_mse: pixel outside the truth grid");
        const Spectrum z_true = whiten(pe.observed, bg.pixel(pe.pixel), transform);
        sum += (pe.whitened - z_true).squaredNorm();
    }
    return sum / (static_cast<double>(result.pixels.size()) * static_cast<double>(result.wavelengths.size()));
}

namespace {

std::vector<double> to_vec(const Spectrum& s) { return {s.data(), s.data() + s.size()}; }

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

void save_result(const LocalWhitenResult& result, const fs::path& dir, const std::optional<LebeausConfig>& config) {
    fs::create_directories(dir);
    const std::size_t c = result.wavelengths.size();
    {
        std::ofstream out(dir / "pixels.csv");
        if (!out) throw std::runtime_error("cannot write " + (dir / "pixels.csv").string());
        out << "row,col,segment,alpha";
        for (const char* prefix : {"x_", "b_", "z_"})
            for (std::size_t k = 0; k < c; ++k) out << ',' << prefix << k;
        out << '\n';
        for (const auto& pe : result.pixels) {
            out << pe.pixel / result.cols << ',' << pe.pixel % result.cols << ',' << pe.segment << ','
                << format_double(pe.alpha);
            for (const Spectrum* s : {&pe.observed, &pe.background, &pe.whitened})
                for (std::size_t k = 0; k < c; ++k) out << ',' << format_double((*s)[static_cast<Eigen::Index>(k)]);
            out << '\n';
        }
        if (!out) throw std::runtime_error("failed writing pixels.csv");
    }
    save_matrix_csv(result.transform.inv_sqrt, dir / "transform.csv");
    save_stats(result.stats, result.wavelengths, dir / "mean.csv", dir / "covariance.csv");
    save_spectrum_csv(result.mean_whitened, result.wavelengths, dir / "mean_whitened.csv");

    json segs = json::array();
    std::size_t fallbacks = 0;
    for (const auto& s : result.segments) {
        json js = {{"label", s.label},
                   {"roi_pixels", s.roi_pixels},
                   {"own_clean_pixels", s.own_clean_pixels},
                   {"donor_pixels", s.donor_pixels},
                   {"donors", s.donors},
                   {"background", to_vec(s.background)},
                   {"mean_whitened", to_vec(s.mean_whitened)},
                   {"fallback", s.fallback},
                   {"note", s.note}};
        js["fit"] = s.fit ? to_json(*s.fit) : json(nullptr);
        fallbacks += s.fallback;
        segs.push_back(std::move(js));
    }
    write_json(segs, dir / "segments.json");

    json summary = {{"method", result.method},
                    {"rows", result.rows},
                    {"cols", result.cols},
                    {"channels", c},
                    {"roi_pixels", result.pixels.size()},
                    {"plume_segments", result.segments.size()},
                    {"fallback_segments", fallbacks},
                    {"ridge", result.transform.ridge},
                    {"global_pixel_count", result.stats.pixel_count}};
    if (config) summary["config"] = config->to_json();
    write_json(summary, dir / "summary.json");
}

LocalWhitenResult load_result(const fs::path& dir) {
    LocalWhitenResult r;
    std::vector<double> wl;
    r.stats = load_stats(dir / "mean.csv", dir / "covariance.csv");
    load_spectrum_csv(dir / "mean.csv", &wl);
    r.wavelengths = wl;
    r.transform.inv_sqrt = load_matrix_csv(dir / "transform.csv");
    const std::size_t c = wl.size();
    if (static_cast<std::size_t>(r.transform.inv_sqrt.rows()) != c)
        throw std::runtime_error("transform.csv does not match mean.csv");

    std::ifstream meta(dir / "summary.json");
    if (!meta) throw std::runtime_error("cannot open " + (dir / "summary.json").string());
    const json summary = json::parse(meta);
    r.method = summary.at("method").get<std::string>();
    r.rows = summary.at("rows").get<std::size_t>();
    r.cols = summary.at("cols").get<std::size_t>();
    r.transform.ridge = summary.value("ridge", 0.0);

    std::ifstream in(dir / "pixels.csv");
    if (!in) throw std::runtime_error("cannot open " + (dir / "pixels.csv").string());
    std::string line;
    std::getline(in, line);
    if (split_csv_line(line).size() != 4 + 3 * c) throw std::runtime_error("pixels.csv header does not match channel count");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4 + 3 * c) throw std::runtime_error("pixels.csv: ragged row");
        PixelEstimate pe;
        pe.pixel = static_cast<std::size_t>(parse_double(f[0])) * r.cols + static_cast<std::size_t>(parse_double(f[1]));
        pe.segment = static_cast<int>(parse_double(f[2]));
        pe.alpha = parse_double(f[3]);
        pe.observed.resize(static_cast<Eigen::Index>(c));
        pe.background.resize(static_cast<Eigen::Index>(c));
        pe.whitened.resize(static_cast<Eigen::Index>(c));
        for (std::size_t k = 0; k < c; ++k) {
            pe.observed[static_cast<Eigen::Index>(k)] = parse_double(f[4 + k]);
            pe.background[static_cast<Eigen::Index>(k)] = parse_double(f[4 + c + k]);
            pe.whitened[static_cast<Eigen::Index>(k)] = parse_double(f[4 + 2 * c + k]);
        }
        r.pixels.push_back(std::move(pe));
    }
    finish_result(r);
    return r;
}

}  // namespace lebeaus
