#include "lebeaus/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace lebeaus {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little,
              "cube payload I/O assumes a little-endian host");

struct CubePaths {
    fs::path header;
    fs::path payload;
};

CubePaths cube_paths(const fs::path& path) {
    fs::path stem = path;
    if (path.extension() == ".hdr" || path.extension() == ".img") stem.replace_extension();
    fs::path header = stem;
    header += ".hdr";
    fs::path payload = stem;
    payload += ".img";
    return {header, payload};
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// key = value pairs; braced values may span lines.
std::map<std::string, std::string> parse_envi_header(std::istream& in) {
    std::string magic;
    std::getline(in, magic);
    if (trim(magic) != "ENVI") throw std::runtime_error("cube header does not start with ENVI");
    std::map<std::string, std::string> fields;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw std::runtime_error("malformed header line: " + line);
        std::string key = lower(trim(line.substr(0, eq)));
        std::string value = trim(line.substr(eq + 1));
        if (!value.empty() && value.front() == '{') {
            while (value.find('}') == std::string::npos) {
                std::string more;
                if (!std::getline(in, more)) throw std::runtime_error("unterminated brace in header field " + key);
                value += " " + trim(more);
            }
            value = trim(value.substr(1, value.rfind('}') - 1));
        }
        fields[key] = value;
    }
    return fields;
}

std::size_t header_count(const std::map<std::string, std::string>& f, const std::string& key) {
    auto it = f.find(key);
    if (it == f.end()) throw std::runtime_error("cube header missing field '" + key + "'");
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size())
        throw std::runtime_error("cube header field '" + key + "' is not a count: " + it->second);
    return v;
}

void require_field(const std::map<std::string, std::string>& f, const std::string& key,
                   const std::string& expected) {
    auto it = f.find(key);
    if (it == f.end()) return;
    if (lower(it->second) != expected)
        throw std::runtime_error("unsupported " + key + " = " + it->second + " (expected " + expected + ")");
}

void write_or_throw(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::ofstream open_for_write(const fs::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_for_read(const fs::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

// Reads the next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) throw std::runtime_error("malformed PGM header");
    return tok;
}

std::size_t pgm_number(std::istream& in) {
    std::string tok = pgm_token(in);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) throw std::runtime_error("malformed PGM header value: " + tok);
    return v;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("number formatting failed");
    return std::string(buf, p);
}

double parse_double(const std::string& text) {
    std::string t = trim(text);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size()) throw std::runtime_error("not a number: '" + text + "'");
    return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

HsiCube load_cube(const fs::path& path) {
    auto paths = cube_paths(path);
    if (!fs::exists(paths.header)) throw std::runtime_error("cube header not found: " + paths.header.string());
    if (!fs::exists(paths.payload)) throw std::runtime_error("cube payload not found: " + paths.payload.string());

    auto hdr = open_for_read(paths.header);
    auto fields = parse_envi_header(hdr);
    const std::size_t cols = header_count(fields, "samples");
    const std::size_t rows = header_count(fields, "lines");
    const std::size_t bands = header_count(fields, "bands");
    if (header_count(fields, "data type") != 4) throw std::runtime_error("only data type = 4 (float32) is supported");
    require_field(fields, "interleave", "bsq");
    if (fields.count("byte order") && header_count(fields, "byte order") != 0)
        throw std::runtime_error("only byte order = 0 (little-endian) is supported");
    if (fields.count("header offset") && header_count(fields, "header offset") != 0)
        throw std::runtime_error("nonzero header offset is not supported");

    auto wl_it = fields.find("wavelength");
    if (wl_it == fields.end()) throw std::runtime_error("cube header missing wavelength list");
    std::vector<double> wavelengths;
    for (const auto& tok : split_csv_line(wl_it->second)) {
        if (tok.empty()) continue;
        wavelengths.push_back(parse_double(tok));
    }
    if (wavelengths.size() != bands)
        throw std::runtime_error("wavelength list has " + std::to_string(wavelengths.size()) +
                                 " entries but bands = " + std::to_string(bands));

    const std::size_t count = rows * cols * bands;
    const auto bytes = fs::file_size(paths.payload);
    if (bytes != count * sizeof(float))
        throw std::runtime_error("cube payload holds " + std::to_string(bytes / sizeof(float)) +
                                 " floats but header requires " + std::to_string(count));
    std::vector<float> data(count);
    auto in = open_for_read(paths.payload, std::ios::binary);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw std::runtime_error("short read on " + paths.payload.string());
    try {
        return HsiCube(rows, cols, std::move(wavelengths), std::move(data));
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(paths.header.string() + ": " + e.what());
    }
}

void save_cube(const HsiCube& cube, const fs::path& path) {
    cube.validate();
    auto paths = cube_paths(path);
    {
        auto out = open_for_write(paths.header);
        out << "ENVI\n"
            << "description = {lebeaus radiance cube}\n"
            << "samples = " << cube.cols() << "\n"
            << "lines = " << cube.rows() << "\n"
            << "bands = " << cube.channels() << "\n"
            << "header offset = 0\n"
            << "file type = ENVI Standard\n"
            << "data type = 4\n"
            << "interleave = bsq\n"
            << "byte order = 0\n"
            << "wavelength units = Micrometers\n"
            << "wavelength = {";
        const auto& w = cube.wavelengths();
        for (std::size_t k = 0; k < w.size(); ++k) out << (k ? ", " : "") << format_double(w[k]);
        out << "}\n";
        write_or_throw(out, paths.header);
    }
    auto out = open_for_write(paths.payload, std::ios::binary);
    auto data = cube.data();
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
    write_or_throw(out, paths.payload);
}

PixelMask load_mask(const fs::path& path) {
    auto in = open_for_read(path, std::ios::binary);
    if (pgm_token(in) != "P5") throw std::runtime_error(path.string() + ": not a binary PGM (P5)");
    const std::size_t cols = pgm_number(in);
    const std::size_t rows = pgm_number(in);
    const std::size_t maxval = pgm_number(in);
    if (maxval == 0 || maxval > 255) throw std::runtime_error(path.string() + ": mask PGM must be 8-bit");
    std::vector<unsigned char> raw(rows * cols);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!in) throw std::runtime_error(path.string() + ": truncated PGM payload");
    PixelMask mask(rows, cols);
    for (std::size_t p = 0; p < raw.size(); ++p) mask.set(p, raw[p] != 0);
    return mask;
}

PixelMask load_mask(const fs::path& path, std::size_t rows, std::size_t cols) {
    PixelMask mask = load_mask(path);
    if (mask.rows() != rows || mask.cols() != cols)
        throw std::runtime_error(path.string() + ": mask is " + std::to_string(mask.rows()) + "x" +
                                 std::to_string(mask.cols()) + ", expected " + std::to_string(rows) + "x" +
                                 std::to_string(cols));
    return mask;
}

void save_mask(const PixelMask& mask, const fs::path& path) {
    auto out = open_for_write(path, std::ios::binary);
    out << "P5\n" << mask.cols() << " " << mask.rows() << "\n255\n";
    std::vector<unsigned char> raw(mask.size());
    for (std::size_t p = 0; p < raw.size(); ++p) raw[p] = mask[p] ? 255 : 0;
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    write_or_throw(out, path);
}

void save_spectrum_csv(const Spectrum& values, const std::vector<double>& wavelengths, const fs::path& path) {
    if (static_cast<std::size_t>(values.size()) != wavelengths.size())
        throw std::invalid_argument("spectrum and wavelength grid differ in length");
    auto out = open_for_write(path);
    out << "wavelength_um,value\n";
    for (std::size_t k = 0; k < wavelengths.size(); ++k)
        out << format_double(wavelengths[k]) << ',' << format_double(values[k]) << '\n';
    write_or_throw(out, path);
}

Spectrum load_spectrum_csv(const fs::path& path, std::vector<double>* wavelengths) {
    auto in = open_for_read(path);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "wavelength_um,value")
        throw std::runtime_error(path.string() + ": expected header 'wavelength_um,value'");
    std::vector<double> wl, vals;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw std::runtime_error(path.string() + ": expected 2 columns: " + line);
        wl.push_back(parse_double(f[0]));
        vals.push_back(parse_double(f[1]));
    }
    if (wavelengths) *wavelengths = wl;
    return Eigen::Map<Spectrum>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

void save_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
    auto out = open_for_write(path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
    write_or_throw(out, path);
}

Eigen::MatrixXd load_matrix_csv(const fs::path& path) {
    auto in = open_for_read(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<double> row;
        for (const auto& f : split_csv_line(line)) row.push_back(parse_double(f));
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error(path.string() + ": ragged matrix row");
        rows.push_back(std::move(row));
    }
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace lebeaus
