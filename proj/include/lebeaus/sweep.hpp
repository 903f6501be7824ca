#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lebeaus/pipeline.hpp"

namespace lebeaus {

// Cross product of the listed values, plus optional seeded random trials
// drawn inside the span of each list (min_k log-uniformly).
struct SweepGrid {
    std::vector<double> gamma{0.0, 0.1, 0.2, 0.4};
    std::vector<double> beta{0.0, 0.5, 0.8, 0.95};
    std::vector<std::size_t> min_k{1, 16, 256, 1024};
    std::vector<bool> ibate{true, false};
    std::size_t random_trials = 0;
    std::uint64_t seed = 0;
    LebeausConfig base;  // every other setting

    std::size_t cell_count() const { return gamma.size() * beta.size() * min_k.size() * ibate.size(); }
    void validate() const;
    static SweepGrid from_json(const nlohmann::json& j);
    static SweepGrid load(const std::filesystem::path& path);
};

struct SweepRecord {
    double gamma = 0.0;
    double beta = 0.0;
    std::size_t min_k = 0;
    bool ibate = false;
    double mse = 0.0;
    std::optional<double> runtime_ms;  // empty unless timing was requested
};

struct SweepOptions {
    unsigned threads = 0;        // 0: hardware concurrency
    bool record_timing = false;  // wall-clock times make output non-reproducible
};

std::vector<SweepRecord> sweep(const HsiCube& cube, const PixelMask& roi, const SimulationTruth& truth,
                               const SweepGrid& grid, const SweepOptions& options = {});

// Global-whitening MSE for the same scene, ROI and truth.
double baseline_mse(const HsiCube& cube, const PixelMask& roi, const SimulationTruth& truth,
                    double ridge_scale = kDefaultRidgeScale);

// Index of the lowest-MSE record; earliest wins ties.
std::size_t best_record(const std::vector<SweepRecord>& records);

// results.csv, summary.json and slice_{gamma,beta,min_k,ibate}.svg.
void emit_report(const std::vector<SweepRecord>& records, double baseline, const std::filesystem::path& out_dir);

std::vector<SweepRecord> load_results_csv(const std::filesystem::path& path);

}  // namespace lebeaus
