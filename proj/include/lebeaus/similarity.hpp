#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lebeaus/cube.hpp"
#include "lebeaus/segmentation.hpp"

namespace lebeaus {

struct SimilarityParams {
    double gamma = 0.20;    // fraction of channels dropped by TED
    double beta = 0.80;     // fraction of pair distances dropped by TAL
    std::size_t min_k = 16; // minimum donor pixels to gather

    void validate() const;
};

// Segments larger than this are uniformly subsampled (seeded) before the
// all-pairs TAL computation.
inline constexpr std::size_t kTalSubsampleCap = 4096;

// max(1, round((1 - fraction) * total)): how many of the smallest items survive.
std::size_t kept_count(double fraction, std::size_t total);

// Truncated Euclidean distance: square root of the sum of the
// max(1, round((1-gamma)*c)) smallest per-channel squared differences.
double ted(const Eigen::Ref<const Spectrum>& a, const Eigen::Ref<const Spectrum>& b, double gamma);

// All |A|*|B| TED values between columns of `a` and `b`, sorted ascending.
std::vector<double> pairwise_ted_sorted(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma);

// Mean of the kept_count(beta, n) smallest entries of an ascending list.
double truncated_mean(std::span<const double> sorted, double beta);

// Truncated average linkage between two pixel sets (columns are spectra).
double tal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta, double gamma);

struct RankedSegment {
    int label = 0;
    double distance = 0.0;
};

// Columns of `pixels` selected by `indices`, subsampled to at most `cap`
// columns with a generator seeded from (seed, label).
Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& pixels, std::span<const std::size_t> indices,
                               std::size_t cap = kTalSubsampleCap, std::uint64_t seed = 0, int label = 0);

// Candidates sorted by ascending TAL to the target; ties by ascending label.
std::vector<RankedSegment> rank_candidate_segments(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pixels,
                                                   const SegmentMap& segments, std::span<const int> candidates,
                                                   const SimilarityParams& params, std::uint64_t seed = 0);

// One ranking per entry of `betas`, sharing the pairwise TED work for a single gamma.
std::vector<std::vector<RankedSegment>> rank_candidate_segments_multi(
    const Eigen::MatrixXd& target, const Eigen::MatrixXd& pixels, const SegmentMap& segments,
    std::span<const int> candidates, double gamma, std::span<const double> betas, std::uint64_t seed = 0);

// Number of ROI pixels inside each segment, indexed by label - 1.
std::vector<std::size_t> roi_overlap(const SegmentMap& segments, const PixelMask& roi);

// Labels of segments that share no pixel with the ROI.
std::vector<int> clean_segment_labels(const SegmentMap& segments, const PixelMask& roi);

// The part of a plume segment that drives matching and estimation.
struct PlumeSegment {
    int label = 0;
    std::vector<std::size_t> roi_pixels;    // contaminated
    std::vector<std::size_t> clean_pixels;  // own pixels outside the ROI
};

PlumeSegment split_plume_segment(const SegmentMap& segments, const PixelMask& roi, int label);

struct CleanPixelSet {
    std::vector<std::size_t> pixels;  // own clean pixels first, then donors in rank order
    std::size_t own_count = 0;
    std::vector<int> donors;          // donor labels in rank order

    std::size_t donor_pixel_count() const { return pixels.size() - own_count; }
};

// Own clean pixels, then whole donor segments in ranking order until at
// least min_k donor pixels are held. Throws if the result would be empty.
CleanPixelSet gather_from_ranking(const PlumeSegment& plume, const SegmentMap& segments,
                                  std::span<const RankedSegment> ranking, std::size_t min_k);

// Ranks every ROI-free segment against the plume segment's in-ROI pixels
// and gathers from that ranking.
CleanPixelSet gather_clean_pixels(int plume_label, const PixelMask& roi, const SegmentMap& segments,
                                  const Eigen::MatrixXd& pixels, const SimilarityParams& params,
                                  std::uint64_t seed = 0);

}  // namespace lebeaus
