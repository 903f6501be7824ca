#include "lebeaus/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lebeaus/io.hpp"

namespace lebeaus {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in (0, 1].
double unit_interval(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

std::vector<double> per_channel(const json& j, std::size_t channels, const char* what) {
    if (j.is_number()) return std::vector<double>(channels, j.get<double>());
    auto v = j.get<std::vector<double>>();
    if (v.size() != channels) throw std::invalid_argument(std::string(what) + " must have one value per channel");
    return v;
}

std::vector<double> emissivity_curve(const MaterialConfig& m, const std::vector<double>& wl) {
    if (!m.emissivity_values.empty()) {
        if (m.emissivity_values.size() != wl.size())
            throw std::invalid_argument("material '" + m.name + "': emissivity list length mismatch");
        return m.emissivity_values;
    }
    std::vector<double> e(wl.size());
    for (std::size_t k = 0; k < wl.size(); ++k) {
        double v = m.emissivity_base + m.emissivity_slope * (wl[k] - wl.front());
        for (const auto& f : m.features) {
            const double d = (wl[k] - f.center_um) / f.width_um;
            v -= f.depth * std::exp(-0.5 * d * d);
        }
        e[k] = std::clamp(v, 0.0, 1.0);
    }
    return e;
}

double ramp_fraction(const std::string& gradient, const Region& reg, std::size_t r, std::size_t c) {
    const double fr = reg.rows > 1 ? static_cast<double>(r - reg.row) / static_cast<double>(reg.rows - 1) : 0.0;
    const double fc = reg.cols > 1 ? static_cast<double>(c - reg.col) / static_cast<double>(reg.cols - 1) : 0.0;
    if (gradient == "row") return fr;
    if (gradient == "col") return fc;
    if (gradient == "diagonal") return 0.5 * (fr + fc);
    if (gradient == "none") return 0.0;
    throw std::invalid_argument("unknown temperature gradient '" + gradient + "'");
}

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t pixel, std::uint64_t channel) {
    const std::uint64_t key = splitmix64(splitmix64(seed ^ 0x5851f42d4c957f2dULL) ^ pixel) ^ (channel * 0xd1b54a32d192ed03ULL);
    const double u1 = unit_interval(splitmix64(key));
    const double u2 = unit_interval(splitmix64(key ^ 0xa0761d6478bd642fULL));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * constants::kPi * u2);
}

SceneConfig SceneConfig::from_json(const json& j, const fs::path& base_dir) {
    SceneConfig c;
    c.rows = j.at("rows").get<std::size_t>();
    c.cols = j.at("cols").get<std::size_t>();
    const auto& wl = j.at("wavelengths");
    if (wl.is_array())
        c.wavelengths = wl.get<std::vector<double>>();
    else
        c.wavelengths = linear_wavelengths(wl.at("first").get<double>(), wl.at("last").get<double>(),
                                           wl.at("count").get<std::size_t>());
    const std::size_t channels = c.wavelengths.size();
    c.seed = j.value("seed", std::uint64_t{0});
    c.noise_sigma = j.value("noise_sigma", 0.0);
    if (c.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");

    if (j.contains("atmosphere")) {
        const auto& a = j.at("atmosphere");
        if (a.contains("transmittance")) c.transmittance = per_channel(a.at("transmittance"), channels, "transmittance");
        c.sky_temperature = a.value("sky_temperature", c.sky_temperature);
        if (a.contains("downwelling")) c.downwelling = per_channel(a.at("downwelling"), channels, "downwelling");
    }

    for (const auto& mj : j.at("materials")) {
        MaterialConfig m;
        m.name = mj.value("name", std::string("material") + std::to_string(c.materials.size()));
        const auto& e = mj.at("emissivity");
        if (e.is_array() || e.is_number()) {
            m.emissivity_values = per_channel(e, channels, "emissivity");
        } else {
            m.emissivity_base = e.value("base", m.emissivity_base);
            m.emissivity_slope = e.value("slope", 0.0);
            for (const auto& f : e.value("features", json::array()))
                m.features.push_back({f.at("center").get<double>(), f.at("width").get<double>(),
                                      f.at("depth").get<double>()});
        }
        const auto& t = mj.at("temperature");
        if (t.is_number()) {
            m.temperature_min = m.temperature_max = t.get<double>();
        } else {
            m.temperature_min = t.at("min").get<double>();
            m.temperature_max = t.at("max").get<double>();
            m.temperature_gradient = t.value("gradient", m.temperature_gradient);
        }
        for (const auto& r : mj.at("regions"))
            m.regions.push_back({r.at("row").get<std::size_t>(), r.at("col").get<std::size_t>(),
                                 r.at("rows").get<std::size_t>(), r.at("cols").get<std::size_t>()});
        c.materials.push_back(std::move(m));
    }

    if (j.contains("plume")) {
        const auto& pj = j.at("plume");
        PlumeParams p;
        p.source_row = pj.at("source").at("row").get<double>();
        p.source_col = pj.at("source").at("col").get<double>();
        p.emission_rate = pj.value("emission_rate", p.emission_rate);
        p.wind_speed = pj.value("wind_speed", p.wind_speed);
        p.wind_direction = pj.value("wind_direction", p.wind_direction);
        p.sigma_y_coeff = pj.value("sigma_y_coeff", p.sigma_y_coeff);
        p.sigma_z_coeff = pj.value("sigma_z_coeff", p.sigma_z_coeff);
        p.sigma_exponent = pj.value("sigma_exponent", p.sigma_exponent);
        p.stack_height = pj.value("stack_height", p.stack_height);
        p.pixel_size = pj.value("pixel_size", p.pixel_size);
        p.stack_temperature = pj.value("stack_temperature", p.stack_temperature);
        p.ambient_temperature = pj.value("ambient_temperature", p.ambient_temperature);
        p.validate();
        c.mask_threshold = pj.value("mask_threshold", c.mask_threshold);
        c.plume = p;
    }

    if (j.contains("gas")) {
        const auto& gj = j.at("gas");
        const std::string name = gj.value("name", std::string("gas"));
        if (gj.contains("csv")) {
            fs::path csv = gj.at("csv").get<std::string>();
            if (csv.is_relative()) csv = base_dir / csv;
            std::vector<double> gwl;
            Spectrum a = load_spectrum_csv(csv, &gwl);
            if (gwl.size() != channels) throw std::invalid_argument("gas CSV must have one row per channel");
            c.gas = GasSpectrum{name, gwl, std::vector<double>(a.data(), a.data() + a.size())};
        } else {
            std::vector<AbsorptionBand> bands;
            for (const auto& b : gj.at("bands"))
                bands.push_back({b.at("center").get<double>(), b.at("width").get<double>(), b.at("peak").get<double>()});
            c.gas = gas_from_bands(name, c.wavelengths, bands);
        }
        c.gas->validate(channels);
    }
    return c;
}

SceneConfig SceneConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    return from_json(j, path.parent_path());
}

SyntheticScene synth_scene(const SceneConfig& config) {
    if (config.rows == 0 || config.cols == 0) throw std::invalid_argument("scene must have at least one pixel");
    if (config.materials.empty()) throw std::invalid_argument("scene needs at least one material");
    const std::size_t rows = config.rows, cols = config.cols, n = rows * cols;
    const auto& wl = config.wavelengths;
    const std::size_t channels = wl.size();

    SyntheticScene s;
    s.atmo.transmittance =
        config.transmittance.empty() ? std::vector<double>(channels, config.default_transmittance) : config.transmittance;
    if (config.downwelling.empty()) {
        s.atmo.downwelling.resize(channels);
        for (std::size_t k = 0; k < channels; ++k) s.atmo.downwelling[k] = planck(wl[k], config.sky_temperature);
    } else {
        s.atmo.downwelling = config.downwelling;
    }
    s.atmo.material.assign(n, -1);
    s.atmo.surface_temperature.assign(n, 0.0);
    for (std::size_t mi = 0; mi < config.materials.size(); ++mi) {
        const auto& m = config.materials[mi];
        s.atmo.emissivity.push_back(emissivity_curve(m, wl));
        for (const auto& reg : m.regions) {
            if (reg.rows == 0 || reg.cols == 0 || reg.row + reg.rows > rows || reg.col + reg.cols > cols)
                throw std::invalid_argument("material '" + m.name + "': region outside the scene");
            for (std::size_t r = reg.row; r < reg.row + reg.rows; ++r)
                for (std::size_t c = reg.col; c < reg.col + reg.cols; ++c) {
                    const std::size_t p = r * cols + c;
                    if (s.atmo.material[p] >= 0)
                        throw std::invalid_argument("material regions overlap at pixel (" + std::to_string(r) + ", " +
                                                    std::to_string(c) + ")");
                    s.atmo.material[p] = static_cast<int>(mi);
                    s.atmo.surface_temperature[p] =
                        m.temperature_min +
                        (m.temperature_max - m.temperature_min) * ramp_fraction(m.temperature_gradient, reg, r, c);
                }
        }
    }
    for (std::size_t p = 0; p < n; ++p)
        if (s.atmo.material[p] < 0)
            throw std::invalid_argument("material regions do not cover pixel (" + std::to_string(p / cols) + ", " +
                                        std::to_string(p % cols) + ")");
    s.atmo.validate(n, channels);

    HsiCube cube(rows, cols, wl);
    for (std::size_t p = 0; p < n; ++p) {
        const auto& eps = s.atmo.emissivity[static_cast<std::size_t>(s.atmo.material[p])];
        const std::size_t r = p / cols, c = p % cols;
        for (std::size_t k = 0; k < channels; ++k) {
            const double surface = eps[k] * planck(wl[k], s.atmo.surface_temperature[p]) +
                                   (1.0 - eps[k]) * s.atmo.downwelling[k];
            double v = s.atmo.transmittance[k] * surface;
            if (config.noise_sigma > 0.0) v += config.noise_sigma * counter_normal(config.seed, p, k);
            cube.at(r, c, k) = static_cast<float>(v);
        }
    }
    cube.validate();

    s.cube = cube;
    s.truth.background = std::move(cube);
    s.truth.column_density.assign(n, 0.0);
    s.truth.plume_temperature.assign(n, 0.0);
    s.truth.plume_mask = PixelMask(rows, cols);
    s.gas = config.gas;
    return s;
}

void add_plume(SyntheticScene& scene, const PlumeParams& plume, double mask_threshold) {
    plume.validate();
    if (!(mask_threshold >= 0.0 && mask_threshold < 1.0)) throw std::invalid_argument("mask_threshold must be in [0, 1)");
    const std::size_t rows = scene.cube.rows(), cols = scene.cube.cols(), n = rows * cols;
    auto& truth = scene.truth;
    double max_cl = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        truth.column_density[p] = column_density(static_cast<double>(p / cols), static_cast<double>(p % cols), plume);
        max_cl = std::max(max_cl, truth.column_density[p]);
    }
    if (!(max_cl > 0.0)) throw std::invalid_argument("plume does not reach any pixel of the scene");
    truth.plume_mask = PixelMask(rows, cols);
    for (std::size_t p = 0; p < n; ++p) {
        const double cl = truth.column_density[p];
        truth.plume_temperature[p] = plume_temperature(cl, max_cl, plume);
        if (cl > mask_threshold * max_cl) truth.plume_mask.set(p);
    }
}

SyntheticScene simulate(const SceneConfig& config) {
    SyntheticScene s = synth_scene(config);
    if (config.plume) {
        if (!config.gas) throw std::invalid_argument("a plume needs a gas spectrum");
        add_plume(s, *config.plume, config.mask_threshold);
        s.cube = implant(s.cube, s.truth, *config.gas, s.atmo);
    }
    return s;
}

void write_simulation(const SyntheticScene& scene, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    save_cube(scene.cube, out_dir / "scene");
    save_cube(scene.truth.background, out_dir / "background");
    save_mask(scene.truth.plume_mask, out_dir / "plume_mask.pgm");
    std::ofstream cl(out_dir / "cl.csv");
    if (!cl) throw std::runtime_error("cannot write " + (out_dir / "cl.csv").string());
    cl << "row,col,column_density,plume_temperature\n";
    const std::size_t cols = scene.cube.cols();
    for (std::size_t p = 0; p < scene.truth.column_density.size(); ++p)
        cl << p / cols << ',' << p % cols << ',' << format_double(scene.truth.column_density[p]) << ','
           << format_double(scene.truth.plume_temperature[p]) << '\n';
    if (!cl) throw std::runtime_error("failed writing cl.csv");
    if (scene.gas) {
        const auto& g = *scene.gas;
        save_spectrum_csv(Eigen::Map<const Spectrum>(g.absorption.data(), static_cast<Eigen::Index>(g.absorption.size())),
                          g.wavelengths, out_dir / "gas.csv");
    }
}

SimulationTruth load_truth(const fs::path& dir) {
    SimulationTruth t;
    t.background = load_cube(dir / "background");
    const std::size_t n = t.background.pixel_count(), cols = t.background.cols();
    t.plume_mask = load_mask(dir / "plume_mask.pgm", t.background.rows(), cols);
    t.column_density.assign(n, 0.0);
    t.plume_temperature.assign(n, 0.0);
    std::ifstream in(dir / "cl.csv");
    if (!in) throw std::runtime_error("cannot open " + (dir / "cl.csv").string());
    std::string line;
    std::getline(in, line);
    std::size_t seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 4) throw std::runtime_error("cl.csv: expected 4 columns");
        const auto r = static_cast<std::size_t>(parse_double(f[0]));
        const auto c = static_cast<std::size_t>(parse_double(f[1]));
        if (r >= t.background.rows() || c >= cols) throw std::runtime_error("cl.csv: pixel outside the scene");
        t.column_density[r * cols + c] = parse_double(f[2]);
        t.plume_temperature[r * cols + c] = parse_double(f[3]);
        ++seen;
    }
    if (seen != n) throw std::runtime_error("cl.csv does not cover every pixel");
    t.validate();
    return t;
}

}  // namespace lebeaus
