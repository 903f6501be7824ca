#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "lebeaus/io.hpp"
#include "lebeaus/sweep.hpp"

namespace lebeaus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kWidth = 480, kHeight = 320;
constexpr double kLeft = 70, kRight = 20, kTop = 36, kBottom = 48;

std::string fmt(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmt_metric(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Axis {
    double lo, hi;
    bool log2;
    double map(double v, double px_lo, double px_hi) const {
        const double a = log2 ? std::log2(lo) : lo;
        const double b = log2 ? std::log2(hi) : hi;
        const double x = log2 ? std::log2(v) : v;
        const double f = b > a ? (x - a) / (b - a) : 0.5;
        return px_lo + f * (px_hi - px_lo);
    }
};

struct Tick {
    double value;
    std::string label;
};

// One slice: metric against a single hyperparameter, every record plotted.
void write_slice(const std::vector<SweepRecord>& records, double baseline, std::size_t best, const std::string& name,
                 const std::function<double(const SweepRecord&)>& x_of, const Axis& x_axis,
                 const std::vector<Tick>& x_ticks, const fs::path& path) {
    double ylo = baseline, yhi = baseline;
    for (const auto& r : records) {
        ylo = std::min(ylo, r.mse);
        yhi = std::max(yhi, r.mse);
    }
    const double pad = yhi > ylo ? 0.05 * (yhi - ylo) : std::max(1e-12, 0.05 * std::abs(yhi));
    const Axis y_axis{ylo - pad, yhi + pad, false};
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    auto px = [&](double v) { return x_axis.map(v, x0, x1); };
    auto py = [&](double v) { return y_axis.map(v, y0, y1); };

    std::ostringstream s;
    s << R"(<?xml version="1.0" encoding="UTF-8"?>)" << '\n'
      << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
      << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(">)" << '\n'
      << R"(  <rect x="0" y="0" width=")" << kWidth << R"(" height=")" << kHeight << R"(" fill="white"/>)" << '\n'
      << R"(  <text x=")" << fmt(kWidth / 2) << R"(" y="22" text-anchor="middle" font-family="sans-serif" font-size="14">MSE vs )"
      << name << "</text>\n"
      << R"(  <line x1=")" << fmt(x0) << R"(" y1=")" << fmt(y0) << R"(" x2=")" << fmt(x1) << R"(" y2=")" << fmt(y0)
      << R"(" stroke="black"/>)" << '\n'
      << R"(  <line x1=")" << fmt(x0) << R"(" y1=")" << fmt(y0) << R"(" x2=")" << fmt(x0) << R"(" y2=")" << fmt(y1)
      << R"(" stroke="black"/>)" << '\n';
    for (const auto& t : x_ticks) {
        const double x = px(t.value);
        s << R"(  <line x1=")" << fmt(x) << R"(" y1=")" << fmt(y0) << R"(" x2=")" << fmt(x) << R"(" y2=")" << fmt(y0 + 5)
          << R"(" stroke="black"/>)" << '\n'
          << R"(  <text x=")" << fmt(x) << R"(" y=")" << fmt(y0 + 18)
          << R"(" text-anchor="middle" font-family="sans-serif" font-size="11">)" << t.label << "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = y_axis.lo + (y_axis.hi - y_axis.lo) * i / 4.0;
        const double y = py(v);
        s << R"(  <line x1=")" << fmt(x0 - 5) << R"(" y1=")" << fmt(y) << R"(" x2=")" << fmt(x0) << R"(" y2=")" << fmt(y)
          << R"(" stroke="black"/>)" << '\n'
          << R"(  <text x=")" << fmt(x0 - 8) << R"(" y=")" << fmt(y + 4)
          << R"(" text-anchor="end" font-family="sans-serif" font-size="11">)" << fmt_metric(v) << "</text>\n";
    }
    s << R"(  <text x=")" << fmt((x0 + x1) / 2) << R"(" y=")" << fmt(kHeight - 8)
      << R"(" text-anchor="middle" font-family="sans-serif" font-size="12">)" << name << "</text>\n";

    const double yb = py(baseline);
    s << R"(  <line x1=")" << fmt(x0) << R"(" y1=")" << fmt(yb) << R"(" x2=")" << fmt(x1) << R"(" y2=")" << fmt(yb)
      << R"(" stroke="gray" stroke-dasharray="6,4"/>)" << '\n'
      << R"(  <text x=")" << fmt(x1) << R"(" y=")" << fmt(yb - 4)
      << R"(" text-anchor="end" font-family="sans-serif" font-size="10" fill="gray">global</text>)" << '\n';

    for (const auto& r : records)
        s << R"(  <circle cx=")" << fmt(px(x_of(r))) << R"(" cy=")" << fmt(py(r.mse))
          << R"(" r="3" fill="steelblue" fill-opacity="0.6"/>)" << '\n';

    const double bx = px(x_of(records[best])), by = py(records[best].mse);
    s << R"(  <path d="M )" << fmt(bx - 6) << ' ' << fmt(by - 6) << " L " << fmt(bx + 6) << ' ' << fmt(by + 6) << " M "
      << fmt(bx - 6) << ' ' << fmt(by + 6) << " L " << fmt(bx + 6) << ' ' << fmt(by - 6)
      << R"(" stroke="darkorange" stroke-width="3"/>)" << '\n'
      << "</svg>\n";

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << s.str();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<Tick> linear_ticks(double lo, double hi) {
    std::vector<Tick> t;
    for (int i = 0; i <= 4; ++i) {
        const double v = lo + (hi - lo) * i / 4.0;
        t.push_back({v, fmt(v)});
    }
    return t;
}

}  // namespace

void emit_report(const std::vector<SweepRecord>& records, double baseline, const fs::path& out_dir) {
    if (records.empty()) throw std::invalid_argument("emit_report: no records");
    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "results.csv");
        if (!out) throw std::runtime_error("cannot write " + (out_dir / "results.csv").string());
        out << "gamma,beta,min_k,ibate,mse,runtime_ms\n";
        for (const auto& r : records) {
            out << format_double(r.gamma) << ',' << format_double(r.beta) << ',' << r.min_k << ','
                << (r.ibate ? "true" : "false") << ',' << format_double(r.mse) << ',';
            if (r.runtime_ms) out << fmt(*r.runtime_ms, 3);
            out << '\n';
        }
        if (!out) throw std::runtime_error("failed writing results.csv");
    }

    const std::size_t best = best_record(records);
    const auto& b = records[best];
    json summary = {{"records", records.size()},
                    {"best", {{"gamma", b.gamma}, {"beta", b.beta}, {"min_k", b.min_k}, {"ibate", b.ibate}}},
                    {"best_mse", b.mse},
                    {"baseline_mse", baseline},
                    {"relative_improvement", baseline > 0.0 ? 1.0 - b.mse / baseline : 0.0}};
    {
        std::ofstream out(out_dir / "summary.json");
        if (!out) throw std::runtime_error("cannot write summary.json");
        out << summary.dump(2) << '\n';
    }

    write_slice(records, baseline, best, "gamma", [](const SweepRecord& r) { return r.gamma; }, {0.0, 1.0, false},
                linear_ticks(0.0, 1.0), out_dir / "slice_gamma.svg");
    write_slice(records, baseline, best, "beta", [](const SweepRecord& r) { return r.beta; }, {0.0, 1.0, false},
                linear_ticks(0.0, 1.0), out_dir / "slice_beta.svg");

    std::size_t kmin = records.front().min_k, kmax = kmin;
    for (const auto& r : records) {
        kmin = std::min(kmin, r.min_k);
        kmax = std::max(kmax, r.min_k);
    }
    const double klo = static_cast<double>(kmin) / 1.5, khi = static_cast<double>(kmax) * 1.5;
    std::vector<Tick> kticks;
    for (std::size_t k = 1; k <= kmax * 2; k *= 4)
        if (static_cast<double>(k) >= klo && static_cast<double>(k) <= khi) kticks.push_back({static_cast<double>(k), std::to_string(k)});
    write_slice(records, baseline, best, "min_k", [](const SweepRecord& r) { return static_cast<double>(r.min_k); },
                {klo, khi, true}, kticks, out_dir / "slice_min_k.svg");
    write_slice(records, baseline, best, "ibate", [](const SweepRecord& r) { return r.ibate ? 1.0 : 0.0; },
                {-0.5, 1.5, false}, {{0.0, "off"}, {1.0, "on"}}, out_dir / "slice_ibate.svg");
}

std::vector<SweepRecord> load_results_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "gamma,beta,min_k,ibate,mse,runtime_ms") throw std::runtime_error(path.string() + ": unexpected header");
    std::vector<SweepRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 6) throw std::runtime_error(path.string() + ": expected 6 columns");
        SweepRecord r;
        r.gamma = parse_double(f[0]);
        r.beta = parse_double(f[1]);
        r.min_k = static_cast<std::size_t>(parse_double(f[2]));
        r.ibate = f[3] == "true";
        r.mse = parse_double(f[4]);
        if (!f[5].empty()) r.runtime_ms = parse_double(f[5]);
        out.push_back(r);
    }
    return out;
}

}  // namespace lebeaus
