#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "lebeaus/io.hpp"
#include "test_support.hpp"

using namespace lebeaus;
using lebeaus::testing::TempDir;

namespace {

void write_header(const std::filesystem::path& hdr, std::size_t samples, std::size_t lines, std::size_t bands,
                  const std::string& wavelengths) {
    std::ofstream out(hdr);
    out << "ENVI\nsamples = " << samples << "\nlines = " << lines << "\nbands = " << bands
        << "\nheader offset = 0\ndata type = 4\ninterleave = bsq\nbyte order = 0\nwavelength = {\n " << wavelengths
        << "}\n";
}

void write_floats(const std::filesystem::path& img, std::size_t count) {
    std::ofstream out(img, std::ios::binary);
    for (std::size_t i = 0; i < count; ++i) {
        float v = static_cast<float>(i);
        out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

}  // namespace

TEST_CASE("cube indexing is band sequential over row-major pixels") {
    const std::size_t rows = 3, cols = 4, ch = 5;
    HsiCube cube(rows, cols, linear_wavelengths(8.0, 12.0, ch));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            for (std::size_t k = 0; k < ch; ++k) cube.at(r, c, k) = static_cast<float>(k * rows * cols + r * cols + c);
    for (std::size_t i = 0; i < cube.data().size(); ++i) CHECK(cube.data()[i] == static_cast<float>(i));
    const Spectrum s = cube.pixel(2, 1);
    for (std::size_t k = 0; k < ch; ++k) CHECK(s[static_cast<Eigen::Index>(k)] == doctest::Approx(k * 12 + 2 * 4 + 1));
}

TEST_CASE("load_cube reads a hand-written header and payload") {
    TempDir dir("hdr");
    write_header(dir / "x.hdr", 2, 2, 3, "8.0, 9.0, 10.0");
    write_floats(dir / "x.img", 12);
    const HsiCube cube = load_cube(dir / "x.hdr");
    CHECK(cube.rows() == 2);
    CHECK(cube.cols() == 2);
    CHECK(cube.channels() == 3);
    CHECK(cube.at(1, 0, 2) == 10.0f);  // 2*4 + 1*2 + 0
    // stem and payload paths resolve to the same cube
    CHECK(load_cube(dir / "x") == cube);
    CHECK(load_cube(dir / "x.img") == cube);
}

TEST_CASE("load_cube error paths") {
    TempDir dir("hdr_err");
    SUBCASE("missing file") { CHECK_THROWS_AS(load_cube(dir / "nothing"), std::runtime_error); }
    SUBCASE("payload shorter than header") {
        write_header(dir / "x.hdr", 2, 2, 3, "8, 9, 10");
        write_floats(dir / "x.img", 8);
        CHECK_THROWS_WITH_AS(load_cube(dir / "x"), doctest::Contains("floats"), std::runtime_error);
    }
    SUBCASE("non-increasing wavelengths") {
        write_header(dir / "x.hdr", 2, 2, 3, "8, 10, 9");
        write_floats(dir / "x.img", 12);
        CHECK_THROWS_WITH_AS(load_cube(dir / "x"), doctest::Contains("increasing"), std::runtime_error);
    }
    SUBCASE("non-finite payload") {
        write_header(dir / "x.hdr", 1, 1, 2, "8, 9");
        std::ofstream out(dir / "x.img", std::ios::binary);
        const float v[2] = {1.0f, std::numeric_limits<float>::quiet_NaN()};
        out.write(reinterpret_cast<const char*>(v), sizeof v);
        out.close();
        CHECK_THROWS_WITH_AS(load_cube(dir / "x"), doctest::Contains("non-finite"), std::runtime_error);
    }
    SUBCASE("wavelength count differs from bands") {
        write_header(dir / "x.hdr", 2, 2, 3, "8, 9");
        write_floats(dir / "x.img", 12);
        CHECK_THROWS_AS(load_cube(dir / "x"), std::runtime_error);
    }
}

TEST_CASE("save_cube payload size and NaN rejection") {
    TempDir dir("save");
    const HsiCube cube = lebeaus::testing::random_cube(3, 5, 7, 11);
    save_cube(cube, dir / "c");
    CHECK(std::filesystem::file_size(dir / "c.img") == 3 * 5 * 7 * 4);

    HsiCube bad = cube;
    bad.at(1, 1, 1) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(save_cube(bad, dir / "bad"), std::invalid_argument);
    CHECK_FALSE(std::filesystem::exists(dir / "bad.img"));

    CHECK_THROWS_AS(save_cube(cube, dir / "no_such_dir" / "c"), std::runtime_error);
}

TEST_CASE("cube round trip is bit exact over random cubes") {
    TempDir dir("rt");
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        HsiCube cube = lebeaus::testing::random_cube(1 + seed % 5, 1 + (seed * 7) % 6, 1 + seed % 9, seed, -1e6, 1e6);
        // irregular wavelength grid exercises the header text round trip
        std::vector<double> wl(cube.channels());
        double w = 7.56;
        for (auto& x : wl) x = (w += 0.1 + 1e-9 * static_cast<double>(seed));
        cube = HsiCube(cube.rows(), cube.cols(), wl, std::vector<float>(cube.data().begin(), cube.data().end()));
        save_cube(cube, dir / "rt");
        const HsiCube back = load_cube(dir / "rt");
        REQUIRE(back.data().size() == cube.data().size());
        CHECK(std::memcmp(back.data().data(), cube.data().data(), cube.data().size_bytes()) == 0);
        CHECK(back.wavelengths() == cube.wavelengths());
    }
}

TEST_CASE("masks: PGM semantics, round trip and errors") {
    TempDir dir("mask");
    PixelMask empty(4, 6);
    save_mask(empty, dir / "empty.pgm");
    CHECK(load_mask(dir / "empty.pgm", 4, 6).count() == 0);

    PixelMask full(4, 6, true);
    save_mask(full, dir / "full.pgm");
    {
        std::ifstream in(dir / "full.pgm", std::ios::binary);
        std::string header((std::istreambuf_iterator<char>(in)), {});
        const std::string payload = header.substr(header.size() - 24);
        CHECK(payload == std::string(24, '\xff'));
    }

    {
        std::ofstream out(dir / "one.pgm", std::ios::binary);
        out << "P5\n# comment\n3 2\n255\n";
        const unsigned char px[6] = {255, 0, 0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(px), 6);
    }
    const PixelMask one = load_mask(dir / "one.pgm", 2, 3);
    CHECK(one.count() == 1);
    CHECK(one(0, 0));

    CHECK_THROWS_AS(load_mask(dir / "one.pgm", 3, 3), std::runtime_error);
    {
        std::ofstream out(dir / "bad.pgm");
        out << "P2\n3 2\n255\n0 0 0 0 0 0\n";
    }
    CHECK_THROWS_AS(load_mask(dir / "bad.pgm", 2, 3), std::runtime_error);

    std::mt19937_64 rng(5);
    for (int t = 0; t < 10; ++t) {
        PixelMask m(1 + rng() % 9, 1 + rng() % 9);
        for (std::size_t p = 0; p < m.size(); ++p) m.set(p, rng() % 2 == 0);
        save_mask(m, dir / "rt.pgm");
        CHECK(load_mask(dir / "rt.pgm", m.rows(), m.cols()) == m);
    }
}

TEST_CASE("spectrum and matrix CSV round trip exactly") {
    TempDir dir("csv");
    std::mt19937_64 rng(3);
    const Spectrum s = lebeaus::testing::random_spectrum(17, rng, -1e3, 1e3);
    const auto wl = linear_wavelengths(7.56, 13.16, 17);
    save_spectrum_csv(s, wl, dir / "s.csv");
    std::vector<double> wl_back;
    const Spectrum back = load_spectrum_csv(dir / "s.csv", &wl_back);
    CHECK(back == s);
    CHECK(wl_back == wl);
    {
        std::ifstream in(dir / "s.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "wavelength_um,value");
    }

    Eigen::MatrixXd m = Eigen::MatrixXd::Random(4, 3);
    save_matrix_csv(m, dir / "m.csv");
    CHECK(load_matrix_csv(dir / "m.csv") == m);
}
