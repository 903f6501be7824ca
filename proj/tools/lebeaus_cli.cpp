// Command-line front end: simulate, segment, run, baseline, evaluate, sweep.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lebeaus/io.hpp"
#include "lebeaus/pipeline.hpp"
#include "lebeaus/scene.hpp"
#include "lebeaus/segmentation.hpp"
#include "lebeaus/sweep.hpp"

namespace fs = std::filesystem;
using namespace lebeaus;

namespace {

// Everything a subcommand needs; CLI11 binds straight into these.
struct Args {
    std::string scene_json, out_dir, cube, out_prefix, roi, config_json, result_dir, truth_dir, grid_json;
    int pairs_removed = kDefaultPairsRemoved;
    double ridge_scale = kDefaultRidgeScale;
    unsigned threads = 0;
    bool timing = false;
};

int cmd_simulate(const Args& a) {
    const SceneConfig config = SceneConfig::load(a.scene_json);
    const SyntheticScene scene = simulate(config);
    write_simulation(scene, a.out_dir);
    std::cout << "wrote " << scene.cube.rows() << "x" << scene.cube.cols() << "x" << scene.cube.channels()
              << " scene, plume mask " << scene.roi().count() << " pixels, to " << a.out_dir << "\n";
    return 0;
}

int cmd_segment(const Args& a) {
    const HsiCube cube = load_cube(a.cube);
    const SegmentMap map = segment_cube(cube, a.pairs_removed);
    const fs::path prefix = a.out_prefix;
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    save_labels_pgm(map, prefix.string() + ".pgm");
    save_labels_csv(map, prefix.string() + ".csv");
    std::cout << map.segment_count() << " segments\n";
    return 0;
}

int cmd_run(const Args& a) {
    const HsiCube cube = load_cube(a.cube);
    const PixelMask roi = load_mask(a.roi, cube.rows(), cube.cols());
    const LebeausConfig config = LebeausConfig::load(a.config_json);
    const LocalWhitenResult result = lebeaus_run(cube, roi, config);
    save_result(result, a.out_dir, config);
    std::cout << result.pixels.size() << " ROI pixels over " << result.segments.size() << " segments\n";
    return 0;
}

int cmd_baseline(const Args& a) {
    const HsiCube cube = load_cube(a.cube);
    const PixelMask roi = load_mask(a.roi, cube.rows(), cube.cols());
    const LocalWhitenResult result = global_baseline(cube, roi, a.ridge_scale);
    save_result(result, a.out_dir);
    std::cout << result.pixels.size() << " ROI pixels\n";
    return 0;
}

int cmd_evaluate(const Args& a) {
    const LocalWhitenResult result = load_result(a.result_dir);
    const SimulationTruth truth = load_truth(a.truth_dir);
    const double mse = evaluate_mse(result, truth, result.transform);
    std::cout << nlohmann::json{{"method", result.method}, {"mse", mse}, {"roi_pixels", result.pixels.size()}}.dump()
              << "\n";
    return 0;
}

int cmd_sweep(const Args& a) {
    const HsiCube cube = load_cube(a.cube);
    const PixelMask roi = load_mask(a.roi, cube.rows(), cube.cols());
    const SimulationTruth truth = load_truth(a.truth_dir);
    const SweepGrid grid = SweepGrid::load(a.grid_json);
    const auto records = sweep(cube, roi, truth, grid, {a.threads, a.timing});
    const double baseline = baseline_mse(cube, roi, truth, grid.base.ridge_scale);
    emit_report(records, baseline, a.out_dir);
    const auto& best = records[best_record(records)];
    std::cout << records.size() << " trials; best mse " << format_double(best.mse) << " (gamma " << best.gamma
              << ", beta " << best.beta << ", min_k " << best.min_k << ", ibate " << (best.ibate ? "on" : "off")
              << "); global " << format_double(baseline) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local background estimation and whitening for hyperspectral gas plumes"};
    app.require_subcommand(1);
    Args a;

    auto* sim = app.add_subcommand("simulate", "Synthesize a scene with an implanted plume");
    sim->add_option("scene", a.scene_json, "Scene description (JSON)")->required()->check(CLI::ExistingFile);
    sim->add_option("out_dir", a.out_dir, "Output directory")->required();

    auto* seg = app.add_subcommand("segment", "Watershed-segment a cube");
    seg->add_option("cube", a.cube, "Cube (.hdr/.img stem)")->required();
    seg->add_option("out_prefix", a.out_prefix, "Writes <prefix>.pgm and <prefix>.csv")->required();
    seg->add_option("--pairs-removed", a.pairs_removed, "RCMG pairs removed")->check(CLI::Range(0, kMaxPairsRemoved));

    auto* run = app.add_subcommand("run", "Local background estimation over a plume ROI");
    run->add_option("cube", a.cube, "Cube (.hdr/.img stem)")->required();
    run->add_option("roi", a.roi, "Plume ROI mask (P5 PGM)")->required()->check(CLI::ExistingFile);
    run->add_option("config", a.config_json, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("out_dir", a.out_dir, "Output directory")->required();

    auto* base = app.add_subcommand("baseline", "Whiten the ROI against the global mean");
    base->add_option("cube", a.cube, "Cube (.hdr/.img stem)")->required();
    base->add_option("roi", a.roi, "Plume ROI mask (P5 PGM)")->required()->check(CLI::ExistingFile);
    base->add_option("out_dir", a.out_dir, "Output directory")->required();
    base->add_option("--ridge-scale", a.ridge_scale, "Eigenvalue floor relative to the largest")
        ->check(CLI::NonNegativeNumber);

    auto* eval = app.add_subcommand("evaluate", "Whitened-signal MSE of a result against simulation truth");
    eval->add_option("result_dir", a.result_dir, "Output of run or baseline")->required()->check(CLI::ExistingDirectory);
    eval->add_option("truth_dir", a.truth_dir, "Output of simulate")->required()->check(CLI::ExistingDirectory);

    auto* sw = app.add_subcommand("sweep", "Hyperparameter sweep scored against simulation truth");
    sw->add_option("cube", a.cube, "Cube (.hdr/.img stem)")->required();
    sw->add_option("roi", a.roi, "Plume ROI mask (P5 PGM)")->required()->check(CLI::ExistingFile);
    sw->add_option("truth_dir", a.truth_dir, "Output of simulate")->required()->check(CLI::ExistingDirectory);
    sw->add_option("grid", a.grid_json, "Sweep grid (JSON)")->required()->check(CLI::ExistingFile);
    sw->add_option("out_dir", a.out_dir, "Output directory")->required();
    sw->add_option("--threads", a.threads, "Worker threads (0: all cores)");
    sw->add_flag("--timing", a.timing, "Fill runtime_ms with wall-clock times (output no longer reproducible)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(a);
        if (seg->parsed()) return cmd_segment(a);
        if (run->parsed()) return cmd_run(a);
        if (base->parsed()) return cmd_baseline(a);
        if (eval->parsed()) return cmd_evaluate(a);
        if (sw->parsed()) return cmd_sweep(a);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
