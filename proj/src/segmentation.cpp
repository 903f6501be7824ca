#include "lebeaus/segmentation.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <queue>
#include <stdexcept>
#include <string>

namespace lebeaus {

namespace {

// N, E, S, W
constexpr std::array<int, 4> kDRow{-1, 0, 1, 0};
constexpr std::array<int, 4> kDCol{0, 1, 0, -1};

template <typename Fn>
void for_each_neighbor4(std::size_t rows, std::size_t cols, std::size_t p, Fn&& fn) {
    const auto r = static_cast<long>(p / cols);
    const auto c = static_cast<long>(p % cols);
    for (int d = 0; d < 4; ++d) {
        const long rr = r + kDRow[d];
        const long cc = c + kDCol[d];
        if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
        fn(static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc));
    }
}

void fill_pixel_lists(SegmentMap& map) {
    int max_label = 0;
    for (int l : map.labels) {
        if (l <= 0) throw std::invalid_argument("segment labels must be positive");
        max_label = std::max(max_label, l);
    }
    map.segments.assign(static_cast<std::size_t>(max_label), {});
    for (int l = 1; l <= max_label; ++l) map.segments[static_cast<std::size_t>(l - 1)].label = l;
    for (std::size_t p = 0; p < map.labels.size(); ++p)
        map.segments[static_cast<std::size_t>(map.labels[p] - 1)].pixels.push_back(p);
    for (const auto& s : map.segments)
        if (s.pixels.empty()) throw std::invalid_argument("segment labels are not contiguous");
}

}  // namespace

GradientMap spectral_gradient(const HsiCube& cube, int pairs_removed) {
    if (pairs_removed < 0 || pairs_removed > kMaxPairsRemoved)
        throw std::invalid_argument("pairs_removed must be in [0, " + std::to_string(kMaxPairsRemoved) +
                                    "] for a 3x3 window, got " + std::to_string(pairs_removed));
    const std::size_t rows = cube.rows(), cols = cube.cols();
    const Eigen::MatrixXd px = cube.pixel_matrix();

    GradientMap g{rows, cols, std::vector<double>(rows * cols, 0.0)};
    std::array<std::size_t, 9> window{};
    std::array<double, 81> dist{};
    std::array<bool, 9> alive{};

    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            std::size_t n = 0;
            for (long dr = -1; dr <= 1; ++dr)
                for (long dc = -1; dc <= 1; ++dc) {
                    const long rr = static_cast<long>(r) + dr, cc = static_cast<long>(c) + dc;
                    if (rr < 0 || cc < 0 || rr >= static_cast<long>(rows) || cc >= static_cast<long>(cols)) continue;
                    window[n++] = static_cast<std::size_t>(rr) * cols + static_cast<std::size_t>(cc);
                }
            for (std::size_t i = 0; i < n; ++i) {
                alive[i] = true;
                for (std::size_t j = i + 1; j < n; ++j)
                    dist[i * 9 + j] = (px.col(static_cast<Eigen::Index>(window[i])) -
                                       px.col(static_cast<Eigen::Index>(window[j])))
                                          .norm();
            }
            auto farthest = [&](std::size_t& bi, std::size_t& bj) {
                double best = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (!alive[i]) continue;
                    for (std::size_t j = i + 1; j < n; ++j) {
                        if (!alive[j]) continue;
                        if (dist[i * 9 + j] > best) {
                            best = dist[i * 9 + j];
                            bi = i;
                            bj = j;
                        }
                    }
                }
                return best;
            };
            std::size_t remaining = n;
            for (int k = 0; k < pairs_removed && remaining >= 2; ++k) {
                std::size_t bi = 0, bj = 0;
                farthest(bi, bj);
                alive[bi] = alive[bj] = false;
                remaining -= 2;
            }
            double out = 0.0;
            if (remaining >= 2) {
                std::size_t bi = 0, bj = 0;
                out = farthest(bi, bj);
            }
            g.magnitude[r * cols + c] = out;
        }
    }
    return g;
}

SegmentMap watershed(const GradientMap& gradient) {
    const std::size_t rows = gradient.rows, cols = gradient.cols, n = rows * cols;
    if (gradient.magnitude.size() != n) throw std::invalid_argument("gradient map size mismatch");
    for (double v : gradient.magnitude)
        if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("gradient values must be finite and >= 0");
    const auto& g = gradient.magnitude;

    // Regional minima: 4-connected equal-valued plateaus with no strictly lower neighbor.
    std::vector<int> labels(n, 0);
    std::vector<int> plateau(n, -1);
    std::vector<std::size_t> members;
    std::vector<std::size_t> stack;
    int next_label = 0;
    int plateau_id = 0;
    for (std::size_t seed = 0; seed < n; ++seed) {
        if (plateau[seed] >= 0) continue;
        members.clear();
        stack.assign(1, seed);
        plateau[seed] = plateau_id;
        bool is_minimum = true;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            members.push_back(p);
            for_each_neighbor4(rows, cols, p, [&](std::size_t q) {
                if (g[q] < g[p]) is_minimum = false;
                if (g[q] == g[p] && plateau[q] < 0) {
                    plateau[q] = plateau_id;
                    stack.push_back(q);
                }
            });
        }
        ++plateau_id;
        if (is_minimum) {
            ++next_label;
            for (std::size_t p : members) labels[p] = next_label;
        }
    }

    // Flooding. Queue key is (gradient, arrival order); a pixel is labeled when
    // it is first reached, from the neighbor being expanded.
    using Entry = std::pair<double, std::uint64_t>;
    struct Item {
        Entry key;
        std::size_t pixel;
        bool operator>(const Item& o) const { return key > o.key; }
    };
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::uint64_t arrival = 0;
    for (std::size_t p = 0; p < n; ++p)
        if (labels[p] > 0) queue.push({{g[p], arrival++}, p});
    while (!queue.empty()) {
        const std::size_t p = queue.top().pixel;
        queue.pop();
        for_each_neighbor4(rows, cols, p, [&](std::size_t q) {
            if (labels[q] != 0) return;
            labels[q] = labels[p];
            queue.push({{g[q], arrival++}, q});
        });
    }

    SegmentMap map;
    map.rows = rows;
    map.cols = cols;
    map.labels = std::move(labels);
    fill_pixel_lists(map);
    return map;
}

SegmentMap segment_stats(const HsiCube& cube, SegmentMap map) {
    if (map.rows != cube.rows() || map.cols != cube.cols() || map.labels.size() != cube.pixel_count())
        throw std::invalid_argument("segment_stats: label map does not match cube dimensions");
    fill_pixel_lists(map);
    const std::size_t plane = cube.pixel_count();
    const auto data = cube.data();
    for (auto& s : map.segments) {
        s.mean = Spectrum::Zero(static_cast<Eigen::Index>(cube.channels()));
        for (std::size_t k = 0; k < cube.channels(); ++k) {
            double sum = 0.0;
            for (std::size_t p : s.pixels) sum += data[k * plane + p];
            s.mean[static_cast<Eigen::Index>(k)] = sum / static_cast<double>(s.pixels.size());
        }
    }
    return map;
}

SegmentMap segment_cube(const HsiCube& cube, int pairs_removed) {
    return segment_stats(cube, watershed(spectral_gradient(cube, pairs_removed)));
}

void save_labels_pgm(const SegmentMap& map, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "P5\n" << map.cols << " " << map.rows << "\n65535\n";
    std::vector<unsigned char> raw(map.labels.size() * 2);
    for (std::size_t p = 0; p < map.labels.size(); ++p) {
        const int l = map.labels[p];
        if (l < 0 || l > 65535) throw std::runtime_error("label " + std::to_string(l) + " does not fit a 16-bit PGM");
        raw[2 * p] = static_cast<unsigned char>(l >> 8);
        raw[2 * p + 1] = static_cast<unsigned char>(l & 0xff);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

void save_labels_csv(const SegmentMap& map, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << "row,col,label\n";
    for (std::size_t r = 0; r < map.rows; ++r)
        for (std::size_t c = 0; c < map.cols; ++c) out << r << ',' << c << ',' << map.labels[r * map.cols + c] << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

SegmentMap load_labels_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string magic;
    std::size_t cols = 0, rows = 0, maxval = 0;
    in >> magic >> cols >> rows >> maxval;
    if (magic != "P5" || maxval != 65535) throw std::runtime_error(path.string() + ": not a 16-bit P5 label map");
    in.get();
    std::vector<unsigned char> raw(rows * cols * 2);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error(path.string() + ": truncated label map");
    SegmentMap map;
    map.rows = rows;
    map.cols = cols;
    map.labels.resize(rows * cols);
    for (std::size_t p = 0; p < map.labels.size(); ++p) map.labels[p] = (raw[2 * p] << 8) | raw[2 * p + 1];
    fill_pixel_lists(map);
    return map;
}

}  // namespace lebeaus
