#pragma once

#include <vector>

#include "lebeaus/cube.hpp"

namespace lebeaus {

namespace constants {
inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kSpeedOfLight = 299792458.0;   // m / s
inline constexpr double kBoltzmann = 1.380649e-23;     // J / K
inline constexpr double kPi = 3.14159265358979323846;
}  // namespace constants

// Blackbody spectral radiance in W m^-2 sr^-1 um^-1.
double planck(double wavelength_um, double temperature_k);

// Per-channel absorption coefficient in (ppm m)^-1.
struct GasSpectrum {
    std::string name;
    std::vector<double> wavelengths;
    std::vector<double> absorption;

    void validate(std::size_t channels) const;
};

struct AbsorptionBand {
    double center_um = 0.0;
    double width_um = 0.0;  // Gaussian standard deviation
    double peak = 0.0;      // (ppm m)^-1 at the center
};

GasSpectrum gas_from_bands(std::string name, const std::vector<double>& wavelengths,
                           const std::vector<AbsorptionBand>& bands);

// Gaussian plume on a ground grid. Directions are in image coordinates:
// wind_direction = 0 blows toward increasing column, pi/2 toward increasing row.
struct PlumeParams {
    double source_row = 0.0;
    double source_col = 0.0;
    double emission_rate = 1.0e5;   // ppm m^3 / s
    double wind_speed = 3.0;        // m / s
    double wind_direction = 0.0;    // radians
    double sigma_y_coeff = 0.08;
    double sigma_z_coeff = 0.06;
    double sigma_exponent = 0.9;
    double stack_height = 20.0;     // m
    double pixel_size = 5.0;        // m
    double stack_temperature = 330.0;    // K
    double ambient_temperature = 290.0;  // K

    void validate() const;
};

// Integral over z in [0, inf) of the ground-reflected Gaussian pair
// exp(-(z-H)^2 / 2s^2) + exp(-(z+H)^2 / 2s^2), via the error function.
double vertical_integral(double sigma_z, double stack_height);

// Nadir column density (ppm m) at a point given in the wind frame: metres
// downwind of the source and metres crosswind. Zero for x <= 0.
double column_density_wind(double downwind_m, double crosswind_m, const PlumeParams& params);

// Nadir column density (ppm m) at a pixel; zero upwind of the source.
double column_density(double row, double col, const PlumeParams& params);

// Linear blend from ambient (CL = 0) to stack temperature (CL = max_cl).
double plume_temperature(double cl, double max_cl, const PlumeParams& params);

// Atmosphere and surface state behind every pixel. Reflectance is 1 - emissivity.
struct AtmoSurfaceParams {
    std::vector<double> transmittance;         // tau_a per channel
    std::vector<double> downwelling;           // L_d per channel
    std::vector<std::vector<double>> emissivity;  // per material, per channel
    std::vector<int> material;                 // per pixel, index into emissivity
    std::vector<double> surface_temperature;   // per pixel, K

    void validate(std::size_t pixels, std::size_t channels) const;
};

struct SimulationTruth {
    HsiCube background;                  // radiance before the gas was added
    std::vector<double> column_density;  // ppm m, per pixel
    std::vector<double> plume_temperature;  // K, per pixel
    PixelMask plume_mask;

    void validate() const;
};

// Radiance one channel of one pixel would have with the gas present.
double implanted_radiance(double background_radiance, double absorption, double column_density,
                          double transmittance, double emissivity, double plume_temp, double surface_temp,
                          double downwelling, double wavelength_um);

// Adds the gas described by `truth` on top of truth.background. `cube`
// supplies the grid and must match the background's shape.
HsiCube implant(const HsiCube& cube, const SimulationTruth& truth, const GasSpectrum& gas,
                const AtmoSurfaceParams& atmo);

}  // namespace lebeaus
