#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lebeaus/cube.hpp"

namespace lebeaus {

// ENVI-style cube files: a text header "<stem>.hdr" plus a raw payload
// "<stem>.img" holding little-endian float32 values in BSQ order.
// `path` may name the stem, the .hdr or the .img file.
HsiCube load_cube(const std::filesystem::path& path);
void save_cube(const HsiCube& cube, const std::filesystem::path& path);

// Binary 8-bit PGM (P5). Zero is false, any nonzero value is true.
PixelMask load_mask(const std::filesystem::path& path, std::size_t rows, std::size_t cols);
PixelMask load_mask(const std::filesystem::path& path);
void save_mask(const PixelMask& mask, const std::filesystem::path& path);

// Spectrum CSV: header "wavelength_um,value", one row per channel.
void save_spectrum_csv(const Spectrum& values, const std::vector<double>& wavelengths,
                       const std::filesystem::path& path);
Spectrum load_spectrum_csv(const std::filesystem::path& path, std::vector<double>* wavelengths = nullptr);

// Headerless dense matrix CSV, one row per line.
void save_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd load_matrix_csv(const std::filesystem::path& path);

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// Splits one CSV line on commas (no quoting; none of our files need it).
std::vector<std::string> split_csv_line(const std::string& line);
double parse_double(const std::string& text);

}  // namespace lebeaus
