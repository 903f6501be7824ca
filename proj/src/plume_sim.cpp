#include "lebeaus/plume_sim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lebeaus {

using namespace constants;

double planck(double wavelength_um, double temperature_k) {
    if (!(wavelength_um > 0.0) || !(temperature_k > 0.0))
        throw std::invalid_argument("planck: wavelength and temperature must be positive");
    const double lambda = wavelength_um * 1e-6;
    const double x = kPlanck * kSpeedOfLight / (lambda * kBoltzmann * temperature_k);
    const double per_metre = 2.0 * kPlanck * kSpeedOfLight * kSpeedOfLight / std::pow(lambda, 5) / std::expm1(x);
    return per_metre * 1e-6;
}

void GasSpectrum::validate(std::size_t channels) const {
    if (absorption.size() != channels || wavelengths.size() != channels)
        throw std::invalid_argument("gas spectrum length does not match the channel count");
    for (double a : absorption)
        if (!std::isfinite(a) || a < 0.0) throw std::invalid_argument("gas absorption must be finite and >= 0");
}

GasSpectrum gas_from_bands(std::string name, const std::vector<double>& wavelengths,
                           const std::vector<AbsorptionBand>& bands) {
    GasSpectrum g{std::move(name), wavelengths, std::vector<double>(wavelengths.size(), 0.0)};
    for (const auto& band : bands) {
        if (!(band.width_um > 0.0) || band.peak < 0.0) throw std::invalid_argument("invalid absorption band");
        for (std::size_t k = 0; k < wavelengths.size(); ++k) {
            const double d = (wavelengths[k] - band.center_um) / band.width_um;
            g.absorption[k] += band.peak * std::exp(-0.5 * d * d);
        }
    }
    return g;
}

void PlumeParams::validate() const {
    if (!(wind_speed > 0.0)) throw std::invalid_argument("wind_speed must be positive");
    if (!(sigma_y_coeff > 0.0) || !(sigma_z_coeff > 0.0) || !(sigma_exponent > 0.0))
        throw std::invalid_argument("dispersion coefficients must be positive");
    if (!(stack_temperature > 0.0) || !(ambient_temperature > 0.0))
        throw std::invalid_argument("temperatures must be positive");
    if (!(pixel_size > 0.0)) throw std::invalid_argument("pixel_size must be positive");
    if (emission_rate < 0.0 || stack_height < 0.0) throw std::invalid_argument("emission_rate and stack_height must be >= 0");
}

double vertical_integral(double sigma_z, double stack_height) {
    const double u = stack_height / (sigma_z * std::sqrt(2.0));
    const double half = sigma_z * std::sqrt(kPi / 2.0);
    // Direct plume above ground plus its image below ground.
    return half * (1.0 + std::erf(u)) + half * std::erfc(u);
}

double column_density_wind(double x, double y, const PlumeParams& params) {
    if (x <= 0.0) return 0.0;
    const double sy = params.sigma_y_coeff * std::pow(x, params.sigma_exponent);
    const double sz = params.sigma_z_coeff * std::pow(x, params.sigma_exponent);
    const double lateral = std::exp(-(y * y) / (2.0 * sy * sy));
    return params.emission_rate / (2.0 * kPi * params.wind_speed * sy * sz) * lateral *
           vertical_integral(sz, params.stack_height);
}

double column_density(double row, double col, const PlumeParams& params) {
    const double dx = (col - params.source_col) * params.pixel_size;
    const double dy = (row - params.source_row) * params.pixel_size;
    const double cs = std::cos(params.wind_direction), sn = std::sin(params.wind_direction);
    return column_density_wind(dx * cs + dy * sn, -dx * sn + dy * cs, params);
}

double plume_temperature(double cl, double max_cl, const PlumeParams& params) {
    if (!(max_cl > 0.0)) throw std::invalid_argument("plume_temperature: max_cl must be positive");
    return params.ambient_temperature + (params.stack_temperature - params.ambient_temperature) * (cl / max_cl);
}

void AtmoSurfaceParams::validate(std::size_t pixels, std::size_t channels) const {
    if (transmittance.size() != channels || downwelling.size() != channels)
        throw std::invalid_argument("atmosphere profiles do not match the channel count");
    if (material.size() != pixels || surface_temperature.size() != pixels)
        throw std::invalid_argument("surface maps do not match the pixel count");
    for (double t : transmittance)
        if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("transmittance must lie in [0, 1]");
    for (const auto& e : emissivity) {
        if (e.size() != channels) throw std::invalid_argument("emissivity curve length mismatch");
        for (double v : e)
            if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("emissivity must lie in [0, 1]");
    }
    for (int m : material)
        if (m < 0 || static_cast<std::size_t>(m) >= emissivity.size())
            throw std::invalid_argument("material index out of range");
    for (double t : surface_temperature)
        if (!(t > 0.0)) throw std::invalid_argument("surface temperature must be positive");
}

void SimulationTruth::validate() const {
    const std::size_t n = background.pixel_count();
    if (column_density.size() != n || plume_temperature.size() != n)
        throw std::invalid_argument("truth maps do not match the background cube");
    if (!plume_mask.matches(background)) throw std::invalid_argument("truth plume mask does not match the background cube");
    for (double cl : column_density)
        if (!std::isfinite(cl) || cl < 0.0) throw std::invalid_argument("column density must be finite and >= 0");
}

double implanted_radiance(double background_radiance, double absorption, double column_density,
                          double transmittance, double emissivity, double plume_temp, double surface_temp,
                          double downwelling, double wavelength_um) {
    const double gas_transmittance = std::exp(-absorption * column_density);
    const double reflectance = 1.0 - emissivity;
    const double contrast = planck(wavelength_um, plume_temp) - emissivity * planck(wavelength_um, surface_temp) -
                            reflectance * downwelling;
    return background_radiance + transmittance * (1.0 - gas_transmittance) * contrast;
}

HsiCube implant(const HsiCube& cube, const SimulationTruth& truth, const GasSpectrum& gas,
                const AtmoSurfaceParams& atmo) {
    truth.validate();
    const HsiCube& bg = truth.background;
    if (cube.rows() != bg.rows() || cube.cols() != bg.cols() || cube.channels() != bg.channels())
        throw std::invalid_argument("implant: cube and truth dimensions differ");
    gas.validate(cube.channels());
    atmo.validate(cube.pixel_count(), cube.channels());

    HsiCube out = bg;
    const auto& wl = cube.wavelengths();
    for (std::size_t p = 0; p < cube.pixel_count(); ++p) {
        const double cl = truth.column_density[p];
        if (cl == 0.0) continue;
        const auto& eps = atmo.emissivity[static_cast<std::size_t>(atmo.material[p])];
        const std::size_t r = p / cube.cols(), c = p % cube.cols();
        for (std::size_t k = 0; k < cube.channels(); ++k) {
            out.at(r, c, k) = static_cast<float>(implanted_radiance(
                bg.at(r, c, k), gas.absorption[k], cl, atmo.transmittance[k], eps[k], truth.plume_temperature[p],
                atmo.surface_temperature[p], atmo.downwelling[k], wl[k]));
        }
    }
    out.validate();
    return out;
}

}  // namespace lebeaus
