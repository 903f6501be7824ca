#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out, err;
};

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

CliResult cli(const lebeaus::testing::TempDir& dir, const std::vector<std::string>& args) {
    std::string cmd = "\"" + std::string(LEBEAUS_CLI_PATH) + "\"";
    for (const auto& a : args) cmd += " \"" + a + "\"";
    cmd += " >\"" + (dir / "stdout.txt").string() + "\" 2>\"" + (dir / "stderr.txt").string() + "\"";
    const int rc = std::system(cmd.c_str());
    return {rc == -1 ? -1 : WEXITSTATUS(rc), read_file(dir / "stdout.txt"), read_file(dir / "stderr.txt")};
}

bool one_error_line(const std::string& err) {
    return err.rfind("error: ", 0) == 0 && err.find('\n') == err.size() - 1;
}

const char* kScene = R"({
  "rows": 24, "cols": 24,
  "wavelengths": {"first": 8.0, "last": 12.0, "count": 12},
  "seed": 3, "noise_sigma": 0.02,
  "materials": [
    {"name": "grass", "emissivity": 0.97, "temperature": {"min": 296, "max": 299, "gradient": "row"},
     "regions": [{"row": 0, "col": 0, "rows": 24, "cols": 14}]},
    {"name": "asphalt", "emissivity": {"base": 0.9, "features": [{"center": 9.2, "width": 0.3, "depth": 0.05}]},
     "temperature": 312, "regions": [{"row": 0, "col": 14, "rows": 24, "cols": 10}]}
  ],
  "plume": {"source": {"row": 12, "col": 8}, "pixel_size": 4, "sigma_y_coeff": 0.3, "emission_rate": 20000,
            "stack_height": 5, "mask_threshold": 0.002},
  "gas": {"bands": [{"center": 10.5, "width": 0.2, "peak": 0.01}]}
})";

}  // namespace

TEST_CASE("end-to-end CLI workflow") {
    lebeaus::testing::TempDir dir("cli");
    std::ofstream(dir / "scene.json") << kScene;
    std::ofstream(dir / "run.json") << R"({"gamma": 0.2, "beta": 0.8, "min_k": 16, "ibate": true})";
    std::ofstream(dir / "grid.json") << R"({"gamma": [0.0, 0.2], "beta": [0.8], "min_k": [16], "ibate": [true]})";
    const std::string sim = (dir / "sim").string();

    auto r = cli(dir, {"simulate", (dir / "scene.json").string(), sim});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "sim" / "scene.hdr"));
    CHECK(fs::exists(dir / "sim" / "plume_mask.pgm"));

    r = cli(dir, {"segment", sim + "/scene", (dir / "labels").string()});
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "labels.pgm"));
    CHECK(fs::exists(dir / "labels.csv"));

    r = cli(dir, {"run", sim + "/scene", sim + "/plume_mask.pgm", (dir / "run.json").string(), (dir / "local").string()});
    REQUIRE(r.code == 0);
    r = cli(dir, {"baseline", sim + "/scene", sim + "/plume_mask.pgm", (dir / "global").string()});
    REQUIRE(r.code == 0);

    r = cli(dir, {"evaluate", (dir / "local").string(), sim});
    REQUIRE(r.code == 0);
    const auto local = nlohmann::json::parse(r.out);
    r = cli(dir, {"evaluate", (dir / "global").string(), sim});
    REQUIRE(r.code == 0);
    const auto global = nlohmann::json::parse(r.out);
    CHECK(local.at("method") == "lebeaus");
    CHECK(global.at("method") == "global");
    CHECK(local.at("roi_pixels") == global.at("roi_pixels"));
    CHECK(local.at("mse").get<double>() >= 0.0);

    r = cli(dir, {"sweep", sim + "/scene", sim + "/plume_mask.pgm", sim, (dir / "grid.json").string(),
                  (dir / "sweep").string()});
    REQUIRE(r.code == 0);
    const std::string csv = read_file(dir / "sweep" / "results.csv");
    CHECK(csv.rfind("gamma,beta,min_k,ibate,mse,runtime_ms\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    for (const char* f : {"summary.json", "slice_gamma.svg", "slice_beta.svg", "slice_min_k.svg", "slice_ibate.svg"})
        CHECK(fs::exists(dir / "sweep" / f));
}

TEST_CASE("CLI failures exit nonzero with one diagnostic line") {
    lebeaus::testing::TempDir dir("cli_err");
    std::ofstream(dir / "bad.json") << R"({"rows": 4})";
    std::ofstream(dir / "grid.json") << R"({"gamma": []})";

    auto r = cli(dir, {});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"simulate", (dir / "missing.json").string(), (dir / "out").string()});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"simulate", (dir / "bad.json").string(), (dir / "out").string()});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"baseline", (dir / "nocube").string(), (dir / "bad.json").string(), (dir / "out").string()});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"segment", (dir / "nocube").string(), (dir / "x").string(), "--pairs-removed", "9"});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"frobnicate"});
    CHECK(r.code != 0);
    CHECK(one_error_line(r.err));

    r = cli(dir, {"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("sweep") != std::string::npos);
}
