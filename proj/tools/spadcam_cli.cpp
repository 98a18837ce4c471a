// spadcam -- simulate overlap-scan SPAD captures and reconstruct intensity
// and depth from them.
//
// Exit codes: 0 success, 1 invalid input, 2 solver failure, 3 I/O error.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spadcam/calibration.hpp"
#include "spadcam/config.hpp"
#include "spadcam/histogram_io.hpp"
#include "spadcam/image_io.hpp"
#include "spadcam/metrics.hpp"
#include "spadcam/parallel.hpp"

#ifndef SPADCAM_VERSION
#define SPADCAM_VERSION "dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spadcam;

namespace {

constexpr int kExitOk = 0, kExitValidation = 1, kExitSolver = 2, kExitIo = 3;

struct Global {
  std::string config_path;
  std::string profile;
  std::vector<std::string> overrides;
  std::size_t threads{0};
  bool quiet{false};
};

// One run: resolved config, output directory, log stream and the recorded
// command line used for the manifest.
class Run {
 public:
  Run(std::string command, std::vector<std::string> args, fs::path out, bool quiet)
      : command_(std::move(command)), args_(std::move(args)), out_(std::move(out)), quiet_(quiet) {
    std::error_code ec;
    fs::create_directories(out_, ec);
    if (ec) throw IoError("cannot create output directory " + out_.string() + ": " + ec.message());
    log_.open(out_ / "log.jsonl");
    if (!log_) throw IoError("cannot open " + (out_ / "log.jsonl").string());
  }

  const fs::path& out() const { return out_; }
  fs::path path(const std::string& name) const { return out_ / name; }

  void log(const std::string& event, json fields = json::object()) {
    fields["event"] = event;
    log_ << fields.dump() << '\n';
    if (!quiet_) {
      std::cerr << "[" << command_ << "] " << event;
      for (auto it = fields.begin(); it != fields.end(); ++it)
        if (it.key() != "event") std::cerr << ' ' << it.key() << '=' << it.value().dump();
      std::cerr << '\n';
    }
  }

  void write_manifest(const RunConfig& config) {
    json m = json::parse(dump_config(config));
    m["run"] = {{"command", command_}, {"args", args_}, {"version", SPADCAM_VERSION}};
    std::ofstream os(path("manifest.json"));
    os << m.dump(2) << '\n';
    if (!os) throw IoError("failed writing manifest");
  }

 private:
  std::string command_;
  std::vector<std::string> args_;
  fs::path out_;
  bool quiet_;
  std::ofstream log_;
};

RunConfig base_config(const Global& g) {
  std::string path = g.config_path;
  if (path.empty())
    if (const char* env = std::getenv("SPADCAM_CONFIG")) path = env;
  if (!g.profile.empty() && !g.config_path.empty()) throw ValidationError("pass either --profile or --config");
  RunConfig c = !g.profile.empty() ? profile_config(g.profile)
                : path.empty()     ? profile_config("table_one")
                                   : load_config(path);
  apply_overrides(c, g.overrides);
  return c;
}

// Either a builtin scene name or a scene file.
void select_scene(RunConfig& c, const std::string& scene) {
  if (scene.empty()) return;
  if (scene == "ball" || scene == "plane") {
    c.scene.kind = scene;
  } else {
    c.scene.kind = "file";
    c.scene.path = fs::absolute(scene);
  }
}

struct Prepared {
  RunConfig config;
  SceneModel scene;
  PulseModel pulse;
};

Prepared prepare(RunConfig c) {
  c.validate();
  SceneModel scene = build_scene(c);
  RunConfig resolved = resolve_config(c, scene);
  PulseModel pulse = build_pulse(resolved);
  return {std::move(resolved), std::move(scene), std::move(pulse)};
}

HistogramCube simulate_cube(const Prepared& p, std::size_t window, std::uint64_t seed) {
  const IlluminationOperator op(p.config.shape, IlluminationConfig{window, p.config.illumination.epsilon});
  if (p.config.simulate_deadtime) return sample_with_deadtime(p.scene, op, p.pulse, p.config.system, seed);
  return sample_poisson(expected_histograms(p.scene, op, p.pulse, p.config.system), p.config.shape, seed);
}

void check_cube(const HistogramCube& cube, const RunConfig& c) {
  if (!(cube.shape == c.shape) || cube.bins != c.system.bins)
    throw ValidationError("cube is " + std::to_string(cube.shape.rows) + "x" + std::to_string(cube.shape.cols) + "x" +
                          std::to_string(cube.bins) + " but the config expects " + std::to_string(c.shape.rows) +
                          "x" + std::to_string(c.shape.cols) + "x" + std::to_string(c.system.bins));
}

template <typename F>
auto stage(const std::string& name, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const SolverError& e) {
    throw SolverError(name + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(name + ": " + e.what());
  }
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

void print_table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  for (const auto& r : rows) std::cout << std::left << std::setw(static_cast<int>(w) + 2) << r.first << r.second << '\n';
}

void write_metrics_csv(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream os(path);
  os << "metric,value\n";
  for (const auto& r : rows) os << r.first << ',' << r.second << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

void write_convergence(const fs::path& path, const std::vector<SolveReport>& reports) {
  std::ofstream os(path);
  os << "slice,iterations,converged,primal_residual,dual_residual,objective\n" << std::setprecision(17);
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto& r = reports[j];
    os << j + 1 << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.primal_residual << ','
       << r.dual_residual << ',' << r.final_objective << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

// Reads one named column of a CSV file written by this tool.
std::vector<double> read_csv_column(const fs::path& path, const std::string& column) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + " is empty");
  std::vector<std::string> header;
  for (std::stringstream ss(line); std::getline(ss, line, ',');) header.push_back(line);
  const auto it = std::find(header.begin(), header.end(), column);
  if (it == header.end()) throw ValidationError(path.string() + " has no column '" + column + "'");
  const auto idx = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (line.ends_with(',')) cells.emplace_back();
    if (cells.size() != header.size()) throw IoError(path.string() + ": malformed row");
    out.push_back(cells[idx].empty() ? std::nan("") : std::stod(cells[idx]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines shared by reconstruct-* and sweep
// ---------------------------------------------------------------------------

struct IntensityOutcome {
  IntensityResult result;
  std::vector<double> kappa;
};

IntensityOutcome run_intensity(const HistogramCube& cube, const RunConfig& c, const PulseModel& pulse) {
  const IlluminationOperator op(c.shape, c.illumination);
  const DerivativeStack stack(c.shape);
  const InverseTable table = stage("inverse table", [&] { return inverse_table_for(cube); });
  IntensityResult r = recover_intensity(cube, op, stack, table, c.intensity);
  auto kappa = reflectivity_estimate(r.alpha_opt, pulse, c.system);
  return {std::move(r), std::move(kappa)};
}

DepthResult run_depth(const HistogramCube& cube, const RunConfig& c, const PulseModel& pulse) {
  const IlluminationOperator op(c.shape, c.illumination);
  return recover_depth(cube, op, pulse, c.system.bin_width, c.depth);
}

std::vector<bool> depth_mask(const SceneModel& truth, const RunConfig& c, const PulseModel& pulse,
                             const DepthResult& d, double min_signal) {
  const IlluminationOperator op(c.shape, c.illumination);
  auto mask = threshold_mask(signal_photons(truth, op, pulse, c.system), min_signal);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && d.valid(i);
  return mask;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string scene;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> window;
  std::optional<double> epsilon;
  std::string out;
};

void cmd_simulate(const Global& g, const SimulateArgs& a, Run& run) {
  RunConfig c = base_config(g);
  select_scene(c, a.scene);
  if (a.seed) c.seed = *a.seed;
  if (a.window) c.illumination.window = *a.window;
  if (a.epsilon) c.illumination.epsilon = *a.epsilon;
  const Prepared p = stage("setup", [&] { return prepare(c); });
  run.log("configured", {{"rows", p.config.shape.rows},
                         {"cols", p.config.shape.cols},
                         {"bins", p.config.system.bins},
                         {"window", p.config.illumination.window},
                         {"epsilon", p.config.illumination.epsilon},
                         {"pulse_photons", *p.config.pulse_photons},
                         {"seed", p.config.seed}});
  const HistogramCube cube = stage("simulate", [&] { return simulate_cube(p, p.config.illumination.window, p.config.seed); });
  write_cube(run.path("cube.sphc"), cube);
  write_scene(run.path("truth_scene.txt"), p.scene);
  const PhotonStatistics st = photon_statistics(cube);
  const auto v = intensity_observation(cube);
  std::vector<double> vd(v.begin(), v.end());
  const double vmax = std::max(1.0, *std::max_element(vd.begin(), vd.end()));
  write_preview(run.path("counts_preview.png"), vd, cube.shape, 0.0, vmax);
  run.log("simulated", {{"mean_photons", st.mean}, {"stddev_photons", st.stddev}});
  run.write_manifest(p.config);
}

struct ReconstructArgs {
  std::string cube;
  std::string truth;
  double min_signal{5.0};
  std::string out;
};

void cmd_reconstruct_intensity(const Global& g, const ReconstructArgs& a, Run& run) {
  const Prepared p = stage("setup", [&] { return prepare(base_config(g)); });
  const RunConfig& c = p.config;
  const HistogramCube cube = read_cube(a.cube);
  check_cube(cube, c);
  run.log("loaded", {{"cube", a.cube}, {"pixels", cube.shape.size()}, {"bins", cube.bins}});
  const IntensityOutcome o = stage("intensity", [&] { return run_intensity(cube, c, p.pulse); });
  const auto& r = o.result;
  run.log("denoised", {{"iterations", r.denoise_report.iterations}, {"converged", r.denoise_report.converged}});
  run.log("deconvolved",
          {{"iterations", r.deconvolve_report.iterations}, {"converged", r.deconvolve_report.converged}});

  {
    std::ofstream os(run.path("intensity.csv"));
    os << "pixel,row,col,count,stabilized,b_opt,b_star,alpha,kappa_hat\n" << std::setprecision(17);
    for (std::size_t i = 0; i < r.alpha_opt.size(); ++i) {
      const RowCol rc = pixel_to_rowcol(i + 1, c.shape);
      os << i + 1 << ',' << rc.row << ',' << rc.col << ',' << r.counts[i] << ',' << r.stabilized[i] << ','
         << r.b_opt[i] << ',' << r.b_star[i] << ',' << r.alpha_opt[i] << ',' << o.kappa[i] << '\n';
    }
    if (!os) throw IoError("failed writing intensity.csv");
  }
  r.denoise_report.write_csv(run.path("denoise_convergence.csv"));
  r.deconvolve_report.write_csv(run.path("deconvolve_convergence.csv"));
  const double top = std::max(1e-12, *std::max_element(r.alpha_opt.begin(), r.alpha_opt.end()));
  write_png16(run.path("intensity.png"), r.alpha_opt, c.shape, 0.0, top);
  write_preview(run.path("intensity_preview.png"), r.alpha_opt, c.shape, 0.0, top, 2.2);

  if (!a.truth.empty()) {
    const SceneModel truth = read_scene(a.truth);
    if (!(truth.shape == c.shape)) throw ValidationError("truth scene grid differs from the cube");
    const double q = psnr(o.kappa, truth.reflectivity, 1.0);
    std::vector<std::pair<std::string, std::string>> rows{{"psnr_db", fmt(q, 10)}};
    write_metrics_csv(run.path("metrics.csv"), rows);
    print_table(rows);
    run.log("metrics", {{"psnr_db", q}});
  }
  run.write_manifest(c);
}

void cmd_reconstruct_depth(const Global& g, const ReconstructArgs& a, Run& run) {
  const Prepared p = stage("setup", [&] { return prepare(base_config(g)); });
  const RunConfig& c = p.config;
  const HistogramCube cube = read_cube(a.cube);
  check_cube(cube, c);
  run.log("loaded", {{"cube", a.cube}, {"pixels", cube.shape.size()}, {"bins", cube.bins}});
  const DepthResult d = stage("depth", [&] { return run_depth(cube, c, p.pulse); });
  std::size_t converged = 0, valid = 0;
  for (const auto& r : d.slice_reports) converged += r.converged ? 1 : 0;
  for (std::size_t i = 0; i < d.depth.size(); ++i) valid += d.valid(i) ? 1 : 0;
  run.log("recovered", {{"slices", d.slice_reports.size()}, {"converged_slices", converged}, {"valid_pixels", valid}});

  write_depth_csv(run.path("depth.csv"), d, c.shape);
  write_convergence(run.path("slice_convergence.csv"), d.slice_reports);
  const BallSceneSpec& ball = c.scene.ball;
  write_point_cloud(run.path("points.xyz"), d, c.shape, pixel_pitch(c.shape, ball));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < d.depth.size(); ++i)
    if (d.valid(i)) lo = std::min(lo, d.depth[i]), hi = std::max(hi, d.depth[i]);
  if (!(hi > lo)) {
    lo = valid ? lo - c.system.bin_depth() : 0.0;
    hi = lo + 2.0 * c.system.bin_depth();
  }
  write_png16(run.path("depth.png"), d.depth, c.shape, lo, hi);
  write_preview(run.path("depth_preview.png"), d.depth, c.shape, lo, hi, 1.0);

  if (!a.truth.empty()) {
    const SceneModel truth = read_scene(a.truth);
    if (!(truth.shape == c.shape)) throw ValidationError("truth scene grid differs from the cube");
    const auto mask = depth_mask(truth, c, p.pulse, d, a.min_signal);
    const auto masked = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    std::vector<std::pair<std::string, std::string>> rows{{"masked_pixels", std::to_string(masked)},
                                                          {"valid_pixels", std::to_string(valid)}};
    if (masked > 0) {
      const double e = depth_rmse(d, truth, mask);
      rows.emplace_back("depth_rmse_m", fmt(e, 10));
      rows.emplace_back("depth_rmse_bins", fmt(e / c.system.bin_depth(), 10));
      run.log("metrics", {{"depth_rmse_m", e}, {"masked_pixels", masked}});
    }
    write_metrics_csv(run.path("metrics.csv"), rows);
    print_table(rows);
  }
  run.write_manifest(c);
}

struct SweepArgs {
  std::string parameter;
  std::vector<double> values;
  std::string range;  // start:stop:count, geometric for mu/lambda, linear otherwise
  bool with_depth{false};
  double min_signal{5.0};
  std::string out;
};

std::vector<double> sweep_values(const SweepArgs& a) {
  if (!a.values.empty()) return a.values;
  if (a.range.empty()) throw ValidationError("sweep needs --values or --range");
  std::vector<std::string> parts;
  std::stringstream ss(a.range);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 3) throw ValidationError("range must be start:stop:count");
  const double lo = std::stod(parts[0]), hi = std::stod(parts[1]);
  const long count = std::stol(parts[2]);
  if (count < 1) throw ValidationError("range count must be at least 1");
  const bool geometric = a.parameter == "mu" || a.parameter == "lambda";
  if (geometric && !(lo > 0.0 && hi > 0.0)) throw ValidationError("mu/lambda ranges must be positive");
  std::vector<double> v;
  for (long k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(count - 1);
    v.push_back(geometric ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
  }
  return v;
}

void cmd_sweep(const Global& g, const SweepArgs& a, Run& run) {
  static const std::vector<std::string> kParams{"mu", "lambda", "w", "N"};
  if (std::find(kParams.begin(), kParams.end(), a.parameter) == kParams.end())
    throw ValidationError("sweep parameter must be one of mu, lambda, w, N");
  const auto values = sweep_values(a);
  if (values.empty()) throw ValidationError("empty sweep range");
  const Prepared p = stage("setup", [&] { return prepare(base_config(g)); });
  const bool intensity = a.parameter != "N";
  const bool depth = a.parameter == "N" || a.with_depth;

  std::optional<HistogramCube> shared;
  if (a.parameter != "w") shared = stage("simulate", [&] { return simulate_cube(p, p.config.illumination.window, p.config.seed); });

  std::ofstream os(run.path("sweep.csv"));
  os << "parameter,value,psnr_db,depth_rmse_m\n" << std::setprecision(17);
  double best_value = values.front(), best_score = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    RunConfig c = p.config;
    if (a.parameter == "mu") c.intensity.mu = v;
    if (a.parameter == "lambda") c.intensity.lambda = v;
    if (a.parameter == "w") {
      if (v < 1.0 || v != std::floor(v)) throw ValidationError("window sizes must be positive integers");
      c.illumination.window = static_cast<std::size_t>(v);
    }
    if (a.parameter == "N") {
      if (v < 1.0 || v != std::floor(v)) throw ValidationError("median orders must be positive odd integers");
      c.depth.median_order = static_cast<std::size_t>(v);
    }
    c.validate();
    const HistogramCube cube = shared ? *shared : simulate_cube(p, c.illumination.window, c.seed);
    double q = std::nan(""), e = std::nan("");
    if (intensity) q = psnr(run_intensity(cube, c, p.pulse).kappa, p.scene.reflectivity, 1.0);
    if (depth) {
      const DepthResult d = run_depth(cube, c, p.pulse);
      const auto mask = depth_mask(p.scene, c, p.pulse, d, a.min_signal);
      if (std::find(mask.begin(), mask.end(), true) != mask.end()) e = depth_rmse(d, p.scene, mask);
    }
    os << a.parameter << ',' << v << ',';
    if (!std::isnan(q)) os << q;
    os << ',';
    if (!std::isnan(e)) os << e;
    os << '\n';
    const double score = intensity ? q : -e;
    if (score > best_score) best_score = score, best_value = v;
    run.log("point", {{"value", v}, {"psnr_db", intensity ? json(q) : json(nullptr)},
                      {"depth_rmse_m", std::isnan(e) ? json(nullptr) : json(e)}});
  }
  if (!os) throw IoError("failed writing sweep.csv");
  std::cout << "best " << a.parameter << " = " << fmt(best_value, 10) << " ("
            << (intensity ? "psnr_db " + fmt(best_score, 10) : "depth_rmse_m " + fmt(-best_score, 10)) << ")\n";
  run.log("best", {{"parameter", a.parameter}, {"value", best_value}});
  run.write_manifest(p.config);
}

struct CalibrateArgs {
  std::optional<double> signal_target;
  std::optional<double> diffraction_target;
  std::optional<double> repetitions;  // thinned N_r for the check simulation
  std::string out;
};

void cmd_calibrate(const Global& g, const CalibrateArgs& a, Run& run) {
  RunConfig c = base_config(g);
  if (a.signal_target) c.calibration.raster_signal = *a.signal_target;
  if (a.diffraction_target) c.calibration.diffraction_mean = *a.diffraction_target;
  if (!c.calibration.raster_signal && !c.pulse_photons) c.calibration.raster_signal = 1.0;
  const Prepared p = stage("calibrate", [&] { return prepare(c); });
  const RunConfig& r = p.config;

  // Verify by simulation: noise-only (laser off) and diffraction-only captures.
  SystemParams sys = r.system;
  if (a.repetitions) {
    if (!(*a.repetitions > 0.0)) throw ValidationError("--repetitions must be positive");
    sys.repetitions = *a.repetitions;
  }
  const double scale = r.system.repetitions / sys.repetitions;
  const SceneModel dark{r.shape, std::vector<double>(r.shape.size(), 0.0), p.scene.depth};
  const auto leak = IlluminationOperator::leakage_only(r.shape, r.illumination.epsilon);
  const auto noise_cube = sample_poisson(expected_histograms(dark, leak, p.pulse, sys), r.shape, r.seed);
  const auto diff_cube = sample_poisson(expected_histograms(p.scene, leak, p.pulse, sys), r.shape, r.seed + 1);
  const PhotonStatistics ns = photon_statistics(noise_cube), ds = photon_statistics(diff_cube);

  std::vector<std::pair<std::string, std::string>> rows{
      {"pulse_photons", fmt(*r.pulse_photons, 10)},
      {"epsilon", fmt(r.illumination.epsilon, 10)},
      {"predicted_noise_mean", fmt(expected_noise_mean(r.system), 6)},
      {"predicted_diffraction_mean",
       fmt(expected_diffraction_mean(p.scene, *r.pulse_photons, r.illumination.epsilon, r.system), 6)},
      {"simulated_repetitions", fmt(sys.repetitions, 10)},
      {"simulated_noise_mean", fmt(ns.mean * scale, 6)},
      {"simulated_noise_stddev", fmt(ns.stddev * scale, 6)},
      {"simulated_diffraction_mean", fmt(ds.mean * scale, 6)},
      {"simulated_diffraction_stddev", fmt(ds.stddev * scale, 6)},
  };
  print_table(rows);
  write_metrics_csv(run.path("calibration.csv"), rows);
  {
    std::ofstream os(run.path("calibrated_config.json"));
    os << dump_config(r);
    if (!os) throw IoError("failed writing calibrated_config.json");
  }
  run.log("calibrated", {{"pulse_photons", *r.pulse_photons}, {"epsilon", r.illumination.epsilon}});
  run.write_manifest(r);
}

struct MetricsArgs {
  std::string cube;
  std::string intensity;
  std::string depth;
  std::string truth;
  double min_signal{5.0};
  std::string out;
};

void cmd_metrics(const Global& g, const MetricsArgs& a, Run& run) {
  std::vector<std::pair<std::string, std::string>> rows;
  if (!a.cube.empty()) {
    const PhotonStatistics st = photon_statistics(read_cube(a.cube));
    rows.emplace_back("photons_mean", fmt(st.mean, 10));
    rows.emplace_back("photons_stddev", fmt(st.stddev, 10));
  }
  if (!a.intensity.empty() || !a.depth.empty()) {
    if (a.truth.empty()) throw ValidationError("--truth is required with --intensity or --depth");
    const SceneModel truth = read_scene(a.truth);
    if (!a.intensity.empty()) {
      const auto kappa = read_csv_column(a.intensity, "kappa_hat");
      rows.emplace_back("psnr_db", fmt(psnr(kappa, truth.reflectivity, 1.0), 10));
    }
    if (!a.depth.empty()) {
      const auto depth = read_csv_column(a.depth, "depth_m");
      if (depth.size() != truth.shape.size()) throw ValidationError("depth file does not match the truth grid");
      std::vector<bool> mask(depth.size(), true);
      if (a.min_signal > 0.0) {
        const Prepared p = stage("setup", [&] { return prepare(base_config(g)); });
        if (!(p.config.shape == truth.shape)) throw ValidationError("config grid differs from the truth scene");
        const IlluminationOperator op(p.config.shape, p.config.illumination);
        mask = threshold_mask(signal_photons(truth, op, p.pulse, p.config.system), a.min_signal);
      }
      for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = mask[i] && !std::isnan(depth[i]);
      rows.emplace_back("masked_pixels", std::to_string(std::count(mask.begin(), mask.end(), true)));
      rows.emplace_back("depth_rmse_m", fmt(depth_rmse(depth, truth.depth, mask), 10));
    }
  }
  if (rows.empty()) throw ValidationError("nothing to measure: pass --cube, --intensity or --depth");
  print_table(rows);
  write_metrics_csv(run.path("metrics.csv"), rows);
  run.log("metrics", json::object());
  run.write_manifest(base_config(g));
}

// Subcommand arguments to record in the manifest: everything after the
// subcommand name except the output directory.
std::vector<std::string> recorded_args(const std::vector<std::string>& argv, const std::string& sub) {
  auto it = std::find(argv.begin(), argv.end(), sub);
  std::vector<std::string> out;
  if (it == argv.end()) return out;
  for (++it; it != argv.end(); ++it) {
    if (*it == "--out" || *it == "-o") {
      if (it + 1 != argv.end()) ++it;
      continue;
    }
    if (it->starts_with("--out=")) continue;
    out.push_back(*it);
  }
  return out;
}

int run_cli(std::vector<std::string> argv);

int replay(const std::string& manifest, const std::string& out, const Global& g) {
  std::ifstream is(manifest);
  if (!is) throw IoError("cannot open manifest " + manifest);
  json m;
  try {
    m = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("manifest: ") + e.what());
  }
  if (!m.contains("run")) throw ValidationError(manifest + " has no recorded run");
  const auto command = m["run"].at("command").get<std::string>();
  if (command == "replay") throw ValidationError("cannot replay a replay");
  std::vector<std::string> argv{"spadcam", "--config", manifest, "--threads", std::to_string(g.threads)};
  if (g.quiet) argv.push_back("--quiet");
  argv.push_back(command);
  for (const auto& arg : m["run"].at("args")) argv.push_back(arg.get<std::string>());
  argv.push_back("--out");
  argv.push_back(out);
  return run_cli(argv);
}

int run_cli(std::vector<std::string> argv) {
  CLI::App app{"Overlap-scan SPAD imaging: simulation and intensity/depth reconstruction"};
  app.set_version_flag("--version", SPADCAM_VERSION);
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config_path, "JSON config file (default: $SPADCAM_CONFIG, else the table_one profile)");
  app.add_option("--profile", g.profile, "Built-in profile to start from: table_one or desk");
  app.add_option("--set", g.overrides, "Override a config value, e.g. --set system.bins=256");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores); results do not depend on it");
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a histogram cube of a scene");
  s->add_option("--scene", sim.scene, "ball, plane or a scene file");
  s->add_option("--seed", sim.seed, "RNG seed");
  s->add_option("--window", sim.window, "Illumination window size w");
  s->add_option("--epsilon", sim.epsilon, "DMD leakage fraction");
  s->add_option("--out,-o", sim.out, "Output directory")->required();

  ReconstructArgs ri;
  auto* r1 = app.add_subcommand("reconstruct-intensity", "Recover the intensity image from a cube");
  r1->add_option("--cube", ri.cube, "Histogram cube file")->required();
  r1->add_option("--truth", ri.truth, "Ground-truth scene file for metrics");
  r1->add_option("--out,-o", ri.out, "Output directory")->required();

  ReconstructArgs rd;
  auto* r2 = app.add_subcommand("reconstruct-depth", "Recover the depth map from a cube");
  r2->add_option("--cube", rd.cube, "Histogram cube file")->required();
  r2->add_option("--truth", rd.truth, "Ground-truth scene file for metrics");
  r2->add_option("--min-signal", rd.min_signal, "Signal photons a pixel needs to enter the RMSE");
  r2->add_option("--out,-o", rd.out, "Output directory")->required();

  SweepArgs sw;
  auto* s3 = app.add_subcommand("sweep", "Evaluate reconstruction quality over a parameter grid");
  s3->add_option("--parameter", sw.parameter, "mu, lambda, w or N")->required();
  s3->add_option("--values", sw.values, "Explicit values")->delimiter(',');
  s3->add_option("--range", sw.range, "start:stop:count (geometric for mu and lambda)");
  s3->add_flag("--depth", sw.with_depth, "Also run the depth pipeline (always on for N)");
  s3->add_option("--min-signal", sw.min_signal, "Signal photons a pixel needs to enter the RMSE");
  s3->add_option("--out,-o", sw.out, "Output directory")->required();

  CalibrateArgs ca;
  auto* s4 = app.add_subcommand("calibrate", "Solve pulse energy and leakage for photon-count targets");
  s4->add_option("--signal-target", ca.signal_target, "Raster-scan signal photons per pixel");
  s4->add_option("--diffraction-target", ca.diffraction_target, "Diffraction-only photons per pixel");
  s4->add_option("--repetitions", ca.repetitions, "Thinned N_r for the check simulation");
  s4->add_option("--out,-o", ca.out, "Output directory")->required();

  MetricsArgs me;
  auto* s5 = app.add_subcommand("metrics", "Photon statistics and reconstruction errors");
  s5->add_option("--cube", me.cube, "Histogram cube file");
  s5->add_option("--intensity", me.intensity, "intensity.csv from reconstruct-intensity");
  s5->add_option("--depth", me.depth, "depth.csv from reconstruct-depth");
  s5->add_option("--truth", me.truth, "Ground-truth scene file");
  s5->add_option("--min-signal", me.min_signal, "Signal photons a pixel needs to enter the RMSE (0 = all)");
  s5->add_option("--out,-o", me.out, "Output directory")->required();

  std::string manifest, replay_out;
  auto* s6 = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  s6->add_option("manifest", manifest, "manifest.json of an earlier run")->required();
  s6->add_option("--out,-o", replay_out, "Output directory")->required();

  std::vector<std::string> reversed(argv.rbegin(), argv.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  set_thread_count(g.threads);
  if (*s6) return replay(manifest, replay_out, g);

  const auto* sub = app.get_subcommands().front();
  Run run(sub->get_name(), recorded_args(argv, sub->get_name()),
          *s ? sim.out : *r1 ? ri.out : *r2 ? rd.out : *s3 ? sw.out : *s4 ? ca.out : me.out, g.quiet);
  if (*s) cmd_simulate(g, sim, run);
  else if (*r1) cmd_reconstruct_intensity(g, ri, run);
  else if (*r2) cmd_reconstruct_depth(g, rd, run);
  else if (*s3) cmd_sweep(g, sw, run);
  else if (*s4) cmd_calibrate(g, ca, run);
  else cmd_metrics(g, me, run);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(std::vector<std::string>(argv, argv + argc));
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}
