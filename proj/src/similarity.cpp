#include "lebeaus/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace lebeaus {

void SimilarityParams::validate() const {
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in [0, 1)");
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must be in [0, 1)");
    if (min_k < 1) throw std::invalid_argument("min_k must be >= 1");
}

std::size_t kept_count(double fraction, std::size_t total) {
    if (total == 0) throw std::invalid_argument("kept_count: empty collection");
    const double kept = std::round((1.0 - fraction) * static_cast<double>(total));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(kept, 1.0)), 1, total);
}

namespace {

// Sum of the n smallest entries, added in ascending order so the partial
// sums are monotone in n. Reorders `values`.
double sum_smallest(std::span<double> values, std::size_t n) {
    if (n < values.size()) std::nth_element(values.begin(), values.begin() + static_cast<long>(n), values.end());
    std::sort(values.begin(), values.begin() + static_cast<long>(n));
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
}

double ted_raw(const double* a, const double* b, std::size_t c, std::size_t keep, std::vector<double>& scratch) {
    scratch.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double d = a[k] - b[k];
        scratch[k] = d * d;
    }
    return std::sqrt(sum_smallest(scratch, keep));
}

}  // namespace

double ted(const Eigen::Ref<const Spectrum>& a, const Eigen::Ref<const Spectrum>& b, double gamma) {
    if (a.size() != b.size()) throw std::invalid_argument("ted: spectra differ in length");
    if (a.size() == 0) throw std::invalid_argument("ted: empty spectra");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("ted: gamma must be in [0, 1)");
    const auto c = static_cast<std::size_t>(a.size());
    thread_local std::vector<double> scratch;
    return ted_raw(a.data(), b.data(), c, kept_count(gamma, c), scratch);
}

std::vector<double> pairwise_ted_sorted(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double gamma) {
    if (a.cols() == 0 || b.cols() == 0) throw std::invalid_argument("tal: pixel sets must be nonempty");
    if (a.rows() != b.rows()) throw std::invalid_argument("tal: pixel sets differ in channel count");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("ted: gamma must be in [0, 1)");
    const auto c = static_cast<std::size_t>(a.rows());
    const std::size_t keep = kept_count(gamma, c);
    std::vector<double> out(static_cast<std::size_t>(a.cols() * b.cols()));
    std::vector<double> scratch;
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < a.cols(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            out[idx++] = ted_raw(a.col(i).data(), b.col(j).data(), c, keep, scratch);
    std::sort(out.begin(), out.end());
    return out;
}

double truncated_mean(std::span<const double> sorted, double beta) {
    if (sorted.empty()) throw std::invalid_argument("tal: no pairwise distances");
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("tal: beta must be in [0, 1)");
    const std::size_t n = kept_count(beta, sorted.size());
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sorted[i];
    return s / static_cast<double>(n);
}

double tal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta, double gamma) {
    const auto d = pairwise_ted_sorted(a, b, gamma);
    return truncated_mean(d, beta);
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& pixels, std::span<const std::size_t> indices,
                               std::size_t cap, std::uint64_t seed, int label) {
    std::vector<std::size_t> chosen(indices.begin(), indices.end());
    if (chosen.size() > cap) {
        std::vector<std::size_t> sample;
        sample.reserve(cap);
        std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(label + 1)));
        std::sample(chosen.begin(), chosen.end(), std::back_inserter(sample), cap, rng);
        chosen = std::move(sample);
    }
    Eigen::MatrixXd out(pixels.rows(), static_cast<Eigen::Index>(chosen.size()));
    for (std::size_t j = 0; j < chosen.size(); ++j)
        out.col(static_cast<Eigen::Index>(j)) = pixels.col(static_cast<Eigen::Index>(chosen[j]));
    return out;
}

std::vector<std::vector<RankedSegment>> rank_candidate_segments_multi(
    const Eigen::MatrixXd& target, const Eigen::MatrixXd& pixels, const SegmentMap& segments,
    std::span<const int> candidates, double gamma, std::span<const double> betas, std::uint64_t seed) {
    if (target.cols() == 0) throw std::invalid_argument("rank_candidate_segments: empty target");
    std::vector<std::vector<RankedSegment>> rankings(betas.size());
    for (auto& r : rankings) r.reserve(candidates.size());
    for (int label : candidates) {
        const Segment& seg = segments.segment(label);
        const Eigen::MatrixXd cand = gather_columns(pixels, seg.pixels, kTalSubsampleCap, seed, label);
        const auto sorted = pairwise_ted_sorted(target, cand, gamma);
        for (std::size_t b = 0; b < betas.size(); ++b)
            rankings[b].push_back({label, truncated_mean(sorted, betas[b])});
    }
    for (auto& r : rankings)
        std::sort(r.begin(), r.end(), [](const RankedSegment& x, const RankedSegment& y) {
            return x.distance != y.distance ? x.distance < y.distance : x.label < y.label;
        });
    return rankings;
}

std::vector<RankedSegment> rank_candidate_segments(const Eigen::MatrixXd& target, const Eigen::MatrixXd& pixels,
                                                   const SegmentMap& segments, std::span<const int> candidates,
                                                   const SimilarityParams& params, std::uint64_t seed) {
    params.validate();
    const double beta[] = {params.beta};
    return std::move(rank_candidate_segments_multi(target, pixels, segments, candidates, params.gamma, beta, seed)[0]);
}

std::vector<std::size_t> roi_overlap(const SegmentMap& segments, const PixelMask& roi) {
    if (roi.rows() != segments.rows || roi.cols() != segments.cols)
        throw std::invalid_argument("ROI mask does not match the segment map");
    std::vector<std::size_t> counts(segments.segments.size(), 0);
    for (std::size_t p = 0; p < segments.labels.size(); ++p)
        if (roi[p]) ++counts[static_cast<std::size_t>(segments.labels[p] - 1)];
    return counts;
}

std::vector<int> clean_segment_labels(const SegmentMap& segments, const PixelMask& roi) {
    const auto counts = roi_overlap(segments, roi);
    std::vector<int> out;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i] == 0) out.push_back(static_cast<int>(i + 1));
    return out;
}

PlumeSegment split_plume_segment(const SegmentMap& segments, const PixelMask& roi, int label) {
    PlumeSegment ps;
    ps.label = label;
    for (std::size_t p : segments.segment(label).pixels) (roi[p] ? ps.roi_pixels : ps.clean_pixels).push_back(p);
    return ps;
}

CleanPixelSet gather_from_ranking(const PlumeSegment& plume, const SegmentMap& segments,
                                  std::span<const RankedSegment> ranking, std::size_t min_k) {
    if (min_k < 1) throw std::invalid_argument("min_k must be >= 1");
    CleanPixelSet out;
    out.pixels = plume.clean_pixels;
    out.own_count = out.pixels.size();
    for (const auto& r : ranking) {
        if (out.donor_pixel_count() >= min_k) break;
        if (r.label == plume.label) continue;
        const auto& px = segments.segment(r.label).pixels;
        out.pixels.insert(out.pixels.end(), px.begin(), px.end());
        out.donors.push_back(r.label);
    }
    if (out.pixels.empty())
        throw std::runtime_error("no clean pixels available for segment " + std::to_string(plume.label));
    return out;
}

CleanPixelSet gather_clean_pixels(int plume_label, const PixelMask& roi, const SegmentMap& segments,
                                  const Eigen::MatrixXd& pixels, const SimilarityParams& params,
                                  std::uint64_t seed) {
    params.validate();
    const PlumeSegment plume = split_plume_segment(segments, roi, plume_label);
    std::vector<int> candidates = clean_segment_labels(segments, roi);
    std::erase(candidates, plume_label);
    // The contaminated side is the natural target; a segment with no ROI
    // pixels is matched on its own pixels instead.
    const auto& target_pixels = plume.roi_pixels.empty() ? plume.clean_pixels : plume.roi_pixels;
    std::vector<RankedSegment> ranking;
    if (!candidates.empty()) {
        const Eigen::MatrixXd target = gather_columns(pixels, target_pixels, kTalSubsampleCap, seed, -plume_label);
        ranking = rank_candidate_segments(target, pixels, segments, candidates, params, seed);
    }
    return gather_from_ranking(plume, segments, ranking, params.min_k);
}

}  // namespace lebeaus
