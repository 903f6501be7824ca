#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lebeaus/cube.hpp"

namespace lebeaus {

struct GradientMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> magnitude;  // row-major

    double operator()(std::size_t r, std::size_t c) const { return magnitude[r * cols + c]; }
};

struct Segment {
    int label = 0;
    std::vector<std::size_t> pixels;  // flat pixel indices, ascending
    Spectrum mean;

    std::size_t size() const { return pixels.size(); }
};

// Labels are 1..K; segments[label - 1] describes label `label` once
// segment_stats has run.
struct SegmentMap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> labels;
    std::vector<Segment> segments;

    int segment_count() const { return static_cast<int>(segments.size()); }
    int label_at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }
    const Segment& segment(int label) const { return segments.at(static_cast<std::size_t>(label - 1)); }
};

inline constexpr int kDefaultPairsRemoved = 1;

// Largest value of `pairs_removed` that still leaves a pair inside an
// interior 3x3 window (each removal drops both pixels of the pair).
inline constexpr int kMaxPairsRemoved = 3;

// Robust color morphological gradient over the clipped 3x3 window: drop the
// farthest pixel pair `pairs_removed` times, then report the largest
// remaining Euclidean distance between spectra.
GradientMap spectral_gradient(const HsiCube& cube, int pairs_removed = kDefaultPairsRemoved);

// Immersion flooding from every regional minimum (plateaus included), in
// increasing gradient order with FIFO ties. Each pixel takes the label of
// the 4-neighbor that first reached it (neighbors scanned N, E, S, W), so
// there are no unlabeled ridge pixels. Segment pixel lists are filled;
// means are left empty until segment_stats.
SegmentMap watershed(const GradientMap& gradient);

// Fills pixel lists, counts and mean spectra for every label.
SegmentMap segment_stats(const HsiCube& cube, SegmentMap labels);

// Convenience: gradient, watershed and stats in one call.
SegmentMap segment_cube(const HsiCube& cube, int pairs_removed = kDefaultPairsRemoved);

// 16-bit P5 PGM (maxval 65535, big-endian) and `row,col,label` CSV.
void save_labels_pgm(const SegmentMap& map, const std::filesystem::path& path);
void save_labels_csv(const SegmentMap& map, const std::filesystem::path& path);
SegmentMap load_labels_pgm(const std::filesystem::path& path);

}  // namespace lebeaus
