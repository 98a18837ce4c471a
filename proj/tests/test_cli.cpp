#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "spadcam/histogram_io.hpp"

using namespace spadcam;
namespace fs = std::filesystem;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() : dir(fs::temp_directory_path() / ("spadcam_cli_" + std::to_string(std::random_device{}()))) {
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(SPADCAM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string small_config(const Sandbox& s) {
  std::ofstream(s.p("cfg.json")) << R"({"profile":"desk","grid":{"rows":12,"cols":10},)"
                                 << R"("system":{"bins":64,"bin_width":8e-11},"calibration":{"raster_signal":50.0}})";
  return " --quiet --config " + s.p("cfg.json");
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("simulate writes its outputs and is deterministic across thread counts") {
    Sandbox s;
    const auto cfg = small_config(s);
    REQUIRE(run(cfg + " --threads 1 simulate --seed 5 --out " + s.p("a")) == 0);
    REQUIRE(run(cfg + " --threads 3 simulate --seed 5 --out " + s.p("b")) == 0);
    for (const char* f : {"cube.sphc", "truth_scene.txt", "counts_preview.png", "manifest.json", "log.jsonl"})
      CHECK(fs::exists(s.dir / "a" / f));
    CHECK(slurp(s.dir / "a/cube.sphc") == slurp(s.dir / "b/cube.sphc"));
    CHECK(slurp(s.dir / "a/manifest.json") == slurp(s.dir / "b/manifest.json"));
    REQUIRE(run(cfg + " simulate --seed 6 --out " + s.p("c")) == 0);
    CHECK(slurp(s.dir / "a/cube.sphc") != slurp(s.dir / "c/cube.sphc"));
    const auto cube = read_cube(s.dir / "a/cube.sphc");
    CHECK(cube.shape == GridShape(12, 10));
    CHECK(cube.bins == 64);
  }

  TEST_CASE("reconstructions and replay reproduce byte-identical outputs") {
    Sandbox s;
    const auto cfg = small_config(s);
    REQUIRE(run(cfg + " simulate --seed 2 --out " + s.p("sim")) == 0);
    const auto cube = s.p("sim/cube.sphc"), truth = s.p("sim/truth_scene.txt");
    REQUIRE(run(cfg + " --threads 1 reconstruct-intensity --cube " + cube + " --truth " + truth + " --out " +
                s.p("int")) == 0);
    REQUIRE(run(cfg + " --threads 1 reconstruct-depth --cube " + cube + " --truth " + truth + " --out " +
                s.p("dep")) == 0);
    for (const char* f : {"intensity.csv", "intensity.png", "intensity_preview.png", "metrics.csv",
                          "denoise_convergence.csv", "deconvolve_convergence.csv"})
      CHECK(fs::exists(s.dir / "int" / f));
    for (const char* f : {"depth.csv", "depth.png", "points.xyz", "slice_convergence.csv", "metrics.csv"})
      CHECK(fs::exists(s.dir / "dep" / f));

    REQUIRE(run(" --quiet --threads 2 replay " + s.p("dep/manifest.json") + " --out " + s.p("dep2")) == 0);
    CHECK(slurp(s.dir / "dep/depth.csv") == slurp(s.dir / "dep2/depth.csv"));
    CHECK(slurp(s.dir / "dep/metrics.csv") == slurp(s.dir / "dep2/metrics.csv"));
    REQUIRE(run(" --quiet --threads 3 replay " + s.p("int/manifest.json") + " --out " + s.p("int2")) == 0);
    CHECK(slurp(s.dir / "int/intensity.csv") == slurp(s.dir / "int2/intensity.csv"));
    CHECK(slurp(s.dir / "int/log.jsonl") == slurp(s.dir / "int2/log.jsonl"));
  }

  TEST_CASE("sweep, calibrate and metrics") {
    Sandbox s;
    const auto cfg = small_config(s);
    REQUIRE(run(cfg + " sweep --parameter mu --values 0.1,0.5 --out " + s.p("sw")) == 0);
    std::ifstream sw(s.dir / "sw/sweep.csv");
    std::size_t lines = 0;
    for (std::string l; std::getline(sw, l);) ++lines;
    CHECK(lines == 3);
    REQUIRE(run(cfg + " calibrate --signal-target 20 --diffraction-target 5 --repetitions 1000 --out " + s.p("cal")) == 0);
    CHECK(fs::exists(s.dir / "cal/calibration.csv"));
    REQUIRE(run(" --quiet --config " + s.p("cal/calibrated_config.json") + " simulate --out " + s.p("sim")) == 0);
    REQUIRE(run(cfg + " metrics --cube " + s.p("sim/cube.sphc") + " --out " + s.p("met")) == 0);
    CHECK(fs::exists(s.dir / "met/metrics.csv"));
    CHECK(fs::exists(s.dir / "met/manifest.json"));
  }

  TEST_CASE("raster scan of a black scene without noise gives an all-zero cube") {
    Sandbox s;
    const auto cfg = small_config(s) +
                     " --set calibration.raster_signal=null --set pulse.photons=1.0 --set system.ambient_rate=0"
                     " --set system.dark_rate=0 --set scene.kind=plane --set scene.plane_reflectivity=0";
    REQUIRE(run(cfg + " simulate --window 1 --epsilon 0 --out " + s.p("z")) == 0);
    const auto cube = read_cube(s.dir / "z/cube.sphc");
    for (auto v : cube.counts.data()) CHECK(v == 0u);
  }

  TEST_CASE("exit codes") {
    Sandbox s;
    const auto cfg = small_config(s);
    CHECK(run(cfg + " simulate --out " + s.p("x") + " --set system.etaa=1") == 1);
    CHECK(run(cfg + " --set system.etaa=1 simulate --out " + s.p("x")) == 1);
    CHECK(run(cfg + " --set system.eta=2 simulate --out " + s.p("x")) == 1);
    CHECK(run(cfg + " nonsense") == 1);
    CHECK(run(cfg + " reconstruct-depth --cube " + s.p("missing.sphc") + " --out " + s.p("x")) == 3);
    std::ofstream(s.p("bad.json")) << "{";
    CHECK(run(" --quiet --config " + s.p("bad.json") + " simulate --out " + s.p("x")) == 1);
    CHECK(run(" --help") == 0);
    CHECK(run(cfg + " --profile desk simulate --out " + s.p("x")) == 1);
    CHECK(run(" --quiet --profile nope simulate --out " + s.p("x")) == 1);
  }
}
