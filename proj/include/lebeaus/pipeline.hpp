#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lebeaus/cube.hpp"
#include "lebeaus/ibate.hpp"
#include "lebeaus/plume_sim.hpp"
#include "lebeaus/segmentation.hpp"
#include "lebeaus/similarity.hpp"
#include "lebeaus/whitening.hpp"

namespace lebeaus {

struct LebeausConfig {
    SimilarityParams similarity;
    bool ibate_enabled = true;
    IbateOptions ibate;
    double ridge_scale = kDefaultRidgeScale;
    int pairs_removed = kDefaultPairsRemoved;
    std::uint64_t seed = 0;  // TAL subsampling

    void validate() const;
    static LebeausConfig from_json(const nlohmann::json& j);
    static LebeausConfig load(const std::filesystem::path& path);
    nlohmann::json to_json() const;
};

struct PixelEstimate {
    std::size_t pixel = 0;
    int segment = 0;  // 0 for the global baseline
    Spectrum observed;
    Spectrum background;
    Spectrum whitened;
    double alpha = 0.0;  // iBATE signal strength, 0 when no fit was made
};

struct SegmentEstimate {
    int label = 0;
    std::size_t roi_pixels = 0;
    std::size_t own_clean_pixels = 0;
    std::size_t donor_pixels = 0;
    std::vector<int> donors;
    std::optional<AdditiveFit> fit;
    Spectrum background;
    Spectrum mean_whitened;
    bool fallback = false;
    std::string note;
};

struct LocalWhitenResult {
    std::string method;  // "lebeaus" or "global"
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> wavelengths;
    SceneStats stats;
    WhiteningTransform transform;
    std::vector<PixelEstimate> pixels;  // ascending pixel index, one per ROI pixel
    std::vector<SegmentEstimate> segments;
    Spectrum mean_whitened;             // average of z over the ROI
};

// Everything about a scene that does not depend on the similarity, min_k
// or iBATE settings; shared across the trials of a sweep.
struct SceneContext {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> wavelengths;
    Eigen::MatrixXd pixels;  // channels x pixels
    PixelMask roi;
    SceneStats stats;
    WhiteningTransform transform;
    SegmentMap segments;
    std::vector<PlumeSegment> plume_segments;  // ascending label
    std::vector<int> clean_labels;
    std::uint64_t seed = 0;
};

SceneContext prepare_scene(const HsiCube& cube, const PixelMask& roi, double ridge_scale, int pairs_removed,
                           std::uint64_t seed = 0);

// Candidate ranking for one plume segment.
using RankingProvider = std::function<std::vector<RankedSegment>(const PlumeSegment&)>;

// Ranks ROI-free segments against the plume segment's in-ROI pixels.
std::vector<RankedSegment> rank_for_segment(const SceneContext& ctx, const PlumeSegment& plume,
                                            const SimilarityParams& params);

// Same work for several TAL truncations at once, one ranking per beta.
std::vector<std::vector<RankedSegment>> rank_for_segment_multi(const SceneContext& ctx, const PlumeSegment& plume,
                                                               double gamma, std::span<const double> betas);

// Local background per plume segment, then whitening with the global covariance.
LocalWhitenResult estimate_local(const SceneContext& ctx, const LebeausConfig& config, const RankingProvider& rank);

LocalWhitenResult lebeaus_run(const HsiCube& cube, const PixelMask& roi, const LebeausConfig& config);

// Every ROI pixel whitened against the global mean.
LocalWhitenResult global_baseline(const SceneContext& ctx);
LocalWhitenResult global_baseline(const HsiCube& cube, const PixelMask& roi, double ridge_scale = kDefaultRidgeScale);

// Mean over ROI pixels and channels of (z - inv_sqrt * (x - L_bg_true))^2.
double evaluate_mse(const LocalWhitenResult& result, const SimulationTruth& truth, const WhiteningTransform& transform);

// pixels.csv, transform.csv, mean.csv, covariance.csv, segments.json, summary.json
void save_result(const LocalWhitenResult& result, const std::filesystem::path& dir,
                 const std::optional<LebeausConfig>& config = std::nullopt);
// Reads pixels.csv and transform.csv back; segment fits are not restored.
LocalWhitenResult load_result(const std::filesystem::path& dir);

}  // namespace lebeaus
