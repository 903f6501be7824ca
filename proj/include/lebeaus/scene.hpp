#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "lebeaus/plume_sim.hpp"

namespace lebeaus {

struct EmissivityFeature {
    double center_um = 0.0;
    double width_um = 0.0;
    double depth = 0.0;  // subtracted at the center; negative values add a peak
};

// Axis-aligned block of pixels.
struct Region {
    std::size_t row = 0, col = 0, rows = 0, cols = 0;
};

struct MaterialConfig {
    std::string name;
    // Explicit per-channel curve, or base + slope * (lambda - first) - features.
    std::vector<double> emissivity_values;
    double emissivity_base = 0.95;
    double emissivity_slope = 0.0;
    std::vector<EmissivityFeature> features;
    // Surface temperature ramps linearly from min to max across the region
    // along `temperature_gradient` ("row", "col", "diagonal" or "none").
    double temperature_min = 300.0;
    double temperature_max = 300.0;
    std::string temperature_gradient = "diagonal";
    std::vector<Region> regions;
};

struct SceneConfig {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> wavelengths;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;  // W m^-2 sr^-1 um^-1
    std::vector<double> transmittance;  // per channel; empty means flat default
    std::vector<double> downwelling;    // per channel; empty means B(sky_temperature)
    double default_transmittance = 0.85;
    double sky_temperature = 260.0;
    std::vector<MaterialConfig> materials;
    std::optional<PlumeParams> plume;
    double mask_threshold = 0.01;  // plume mask is CL > threshold * max CL
    std::optional<GasSpectrum> gas;

    static SceneConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static SceneConfig load(const std::filesystem::path& path);
};

struct SyntheticScene {
    HsiCube cube;             // observed radiance (gas included once a plume is added)
    SimulationTruth truth;
    AtmoSurfaceParams atmo;
    std::optional<GasSpectrum> gas;

    const PixelMask& roi() const { return truth.plume_mask; }
};

// Background-only scene: L_bg = tau_a * (eps * B(T_bg) + (1 - eps) * L_d)
// plus seeded Gaussian noise. Truth starts with zero column density.
SyntheticScene synth_scene(const SceneConfig& config);

// Column density and plume temperature maps plus the plume mask.
void add_plume(SyntheticScene& scene, const PlumeParams& plume, double mask_threshold);

// synth_scene, then add_plume and implant when the config has a plume and gas.
SyntheticScene simulate(const SceneConfig& config);

// Writes scene.{hdr,img}, background.{hdr,img}, cl.csv, plume_mask.pgm and gas.csv.
void write_simulation(const SyntheticScene& scene, const std::filesystem::path& out_dir);
// Reads the truth part of a directory produced by write_simulation.
SimulationTruth load_truth(const std::filesystem::path& dir);

// Deterministic standard normal draw keyed by (seed, pixel, channel).
double counter_normal(std::uint64_t seed, std::uint64_t pixel, std::uint64_t channel);

}  // namespace lebeaus
