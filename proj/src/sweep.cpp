#include "lebeaus/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

namespace lebeaus {

namespace fs = std::filesystem;
using nlohmann::json;

void SweepGrid::validate() const {
    if (cell_count() == 0) throw std::invalid_argument("sweep grid is empty");
    for (double g : gamma)
        if (!(g >= 0.0 && g < 1.0)) throw std::invalid_argument("grid gamma values must be in [0, 1)");
    for (double b : beta)
        if (!(b >= 0.0 && b < 1.0)) throw std::invalid_argument("grid beta values must be in [0, 1)");
    for (std::size_t k : min_k)
        if (k < 1) throw std::invalid_argument("grid min_k values must be >= 1");
    base.validate();
}

SweepGrid SweepGrid::from_json(const json& j) {
    SweepGrid g;
    if (j.contains("gamma")) g.gamma = j.at("gamma").get<std::vector<double>>();
    if (j.contains("beta")) g.beta = j.at("beta").get<std::vector<double>>();
    if (j.contains("min_k")) g.min_k = j.at("min_k").get<std::vector<std::size_t>>();
    if (j.contains("ibate")) g.ibate = j.at("ibate").get<std::vector<bool>>();
    g.random_trials = j.value("random_trials", g.random_trials);
    g.seed = j.value("seed", g.seed);
    if (j.contains("base")) g.base = LebeausConfig::from_json(j.at("base"));
    g.validate();
    return g;
}

SweepGrid SweepGrid::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid " + path.string());
    try {
        return from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index writes
// only its own output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    pool.clear();
    if (error) std::rethrow_exception(error);
}

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<SweepRecord> sweep(const HsiCube& cube, const PixelMask& roi, const SimulationTruth& truth,
                               const SweepGrid& grid, const SweepOptions& options) {
    grid.validate();
    truth.validate();
    const auto prep_start = Clock::now();
    const SceneContext ctx = prepare_scene(cube, roi, grid.base.ridge_scale, grid.base.pairs_removed, grid.base.seed);
    const double prep_ms = elapsed_ms(prep_start);
    const std::size_t total_trials = grid.cell_count() + grid.random_trials;

    auto run_trial = [&](const LebeausConfig& cfg, const RankingProvider& rank) {
        const LocalWhitenResult r = estimate_local(ctx, cfg, rank);
        return evaluate_mse(r, truth, ctx.transform);
    };
    auto make_config = [&](double gamma, double beta, std::size_t min_k, bool ibate) {
        LebeausConfig cfg = grid.base;
        cfg.similarity = {gamma, beta, min_k};
        cfg.ibate_enabled = ibate;
        return cfg;
    };

    std::vector<SweepRecord> records;
    records.reserve(total_trials);
    const std::size_t per_gamma = grid.beta.size() * grid.min_k.size() * grid.ibate.size();
    const std::size_t n_plume = ctx.plume_segments.size();

    for (double gamma : grid.gamma) {
        // Pairwise TED work is shared by every beta at this gamma.
        const auto rank_start = Clock::now();
        std::vector<std::vector<std::vector<RankedSegment>>> rankings(n_plume);
        parallel_for(n_plume, options.threads, [&](std::size_t i) {
            rankings[i] = rank_for_segment_multi(ctx, ctx.plume_segments[i], gamma, grid.beta);
        });
        std::map<int, std::size_t> slot;
        for (std::size_t i = 0; i < n_plume; ++i) slot[ctx.plume_segments[i].label] = i;
        const double shared_ms = (elapsed_ms(rank_start) + prep_ms / static_cast<double>(grid.gamma.size())) /
                                 static_cast<double>(per_gamma);

        std::vector<SweepRecord> block(per_gamma);
        parallel_for(per_gamma, options.threads, [&](std::size_t cell) {
            const std::size_t ib = cell % grid.ibate.size();
            const std::size_t mk = (cell / grid.ibate.size()) % grid.min_k.size();
            const std::size_t bt = cell / (grid.ibate.size() * grid.min_k.size());
            const auto start = Clock::now();
            const LebeausConfig cfg = make_config(gamma, grid.beta[bt], grid.min_k[mk], grid.ibate[ib]);
            const double mse = run_trial(cfg, [&](const PlumeSegment& ps) { return rankings[slot.at(ps.label)][bt]; });
            SweepRecord rec{gamma, grid.beta[bt], grid.min_k[mk], grid.ibate[ib], mse, std::nullopt};
            if (options.record_timing) rec.runtime_ms = elapsed_ms(start) + shared_ms;
            block[cell] = rec;
        });
        records.insert(records.end(), block.begin(), block.end());
    }

    if (grid.random_trials > 0) {
        const auto [gmin, gmax] = std::minmax_element(grid.gamma.begin(), grid.gamma.end());
        const auto [bmin, bmax] = std::minmax_element(grid.beta.begin(), grid.beta.end());
        const auto [kmin, kmax] = std::minmax_element(grid.min_k.begin(), grid.min_k.end());
        std::mt19937_64 rng(grid.seed);
        std::vector<LebeausConfig> configs;
        for (std::size_t t = 0; t < grid.random_trials; ++t) {
            const double gamma = *gmin + (*gmax - *gmin) * unit_draw(rng);
            const double beta = *bmin + (*bmax - *bmin) * unit_draw(rng);
            const double log_k = std::log(static_cast<double>(*kmin)) +
                                 (std::log(static_cast<double>(*kmax)) - std::log(static_cast<double>(*kmin))) *
                                     unit_draw(rng);
            const auto min_k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(log_k))), *kmin, *kmax);
            const bool ibate = grid.ibate[static_cast<std::size_t>(unit_draw(rng) * static_cast<double>(grid.ibate.size()))];
            configs.push_back(make_config(gamma, beta, min_k, ibate));
        }
        std::vector<SweepRecord> block(configs.size());
        parallel_for(configs.size(), options.threads, [&](std::size_t t) {
            const auto start = Clock::now();
            const auto& cfg = configs[t];
            const double mse =
                run_trial(cfg, [&](const PlumeSegment& ps) { return rank_for_segment(ctx, ps, cfg.similarity); });
            SweepRecord rec{cfg.similarity.gamma, cfg.similarity.beta, cfg.similarity.min_k, cfg.ibate_enabled, mse,
                            std::nullopt};
            if (options.record_timing) rec.runtime_ms = elapsed_ms(start);
            block[t] = rec;
        });
        records.insert(records.end(), block.begin(), block.end());
    }
    return records;
}

double baseline_mse(const HsiCube& cube, const PixelMask& roi, const SimulationTruth& truth, double ridge_scale) {
    const LocalWhitenResult r = global_baseline(cube, roi, ridge_scale);
    return evaluate_mse(r, truth, r.transform);
}

std::size_t best_record(const std::vector<SweepRecord>& records) {
    if (records.empty()) throw std::invalid_argument("no sweep records");
    std::size_t best = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
        if (records[i].mse < records[best].mse) best = i;
    return best;
}

}  // namespace lebeaus
