// relxi command-line front end.

#include <CLI11.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include "relxi/acceptance.hpp"
#include "relxi/analysis.hpp"
#include "relxi/billiards.hpp"
#include "relxi/error.hpp"
#include "relxi/scene_io.hpp"

namespace fs = std::filesystem;
using namespace relxi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitScene = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitAcceptance = 5;

struct GridSpec {
  double start = 0.0, stop = 0.0;
  int count = 0;
  bool logarithmic = false;

  std::vector<double> values() const { return make_grid(start, stop, count, logarithmic); }
};

/// start:stop:count with an optional "log" or "lin" suffix on the count.
GridSpec parse_grid(const std::string& text) {
  GridSpec g;
  const auto first = text.find(':');
  const auto second = text.find(':', first == std::string::npos ? first : first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    throw ConfigError("grid '" + text + "': expected start:stop:count[log|lin]");
  }
  std::string count = text.substr(second + 1);
  if (count.ends_with("log")) {
    g.logarithmic = true;
    count.resize(count.size() - 3);
  } else if (count.ends_with("lin")) {
    count.resize(count.size() - 3);
  }
  try {
    std::size_t used = 0;
    g.start = std::stod(text.substr(0, first));
    g.stop = std::stod(text.substr(first + 1, second - first - 1));
    g.count = std::stoi(count, &used);
    if (used != count.size()) throw std::invalid_argument("count");
  } catch (const std::logic_error&) {
    throw ConfigError("grid '" + text + "': expected start:stop:count[log|lin]");
  }
  if (g.count < 2) throw ConfigError("grid '" + text + "': count must be at least 2");
  if (!(g.start < g.stop)) throw ConfigError("grid '" + text + "': start must be below stop");
  if (!(g.start > 0.0)) throw ConfigError("grid '" + text + "': values must be positive");
  return g;
}

struct Config {
  std::string scene_path;
  std::string grid;
  std::string axis = "imag";
  int n = 0;
  int l_max = 0;
  double epsilon = 0.05;
  double tol = 1e-8;
  double step = 0.02;
  std::string out;
  std::string cache_dir;
  unsigned threads = 1;
};

// ---------------------------------------------------------------------------
// cache: one file per sample, values stored as hex floats so a hit is bitwise

class SampleCache {
 public:
  SampleCache(std::string dir, std::string scene_hash) : dir_(std::move(dir)), hash_(std::move(scene_hash)) {}

  bool enabled() const { return !dir_.empty(); }

  std::optional<std::vector<double>> load(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(path(key));
    if (!in) return std::nullopt;
    std::vector<double> values;
    std::string token;
    while (in >> token) values.push_back(std::strtod(token.c_str(), nullptr));
    if (values.empty()) return std::nullopt;
    return values;
  }

  void store(const std::string& key, const std::vector<double>& values) const {
    if (!enabled()) return;
    const fs::path target = path(key);
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw ConfigError("cache: cannot create '" + target.parent_path().string() + "'");
    std::ostringstream tmp_name;
    tmp_name << target.string() << ".tmp." << ::getpid() << "." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    {
      std::ofstream out(tmp_name.str());
      char buf[64];
      for (double v : values) {
        std::snprintf(buf, sizeof buf, "%a\n", v);
        out << buf;
      }
      if (!out) throw ConfigError("cache: cannot write '" + tmp_name.str() + "'");
    }
    fs::rename(tmp_name.str(), target, ec);
    if (ec) throw ConfigError("cache: cannot rename into '" + target.string() + "'");
  }

  static std::string key(const char* kind, double lambda_re, double lambda_im, int size) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_%016llx_%016llx_%d", kind,
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(lambda_re)),
                  static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(lambda_im)), size);
    return buf;
  }

 private:
  fs::path path(const std::string& key) const { return fs::path(dir_) / hash_ / key; }

  std::string dir_;
  std::string hash_;
};

std::string cache_dir_for(const Config& cfg) {
  if (!cfg.cache_dir.empty()) return cfg.cache_dir;
  if (const char* env = std::getenv("RELXI_CACHE_DIR")) return env;
  return {};
}

// ---------------------------------------------------------------------------
// output

std::string provenance(const Scene& scene, const Config& cfg) {
  std::string s = "# scene_hash=" + scene_hash(scene);
  if (scene.dimension() == 2) {
    s += ",n=" + (cfg.n > 0 ? std::to_string(cfg.n) : std::string("auto"));
  } else {
    s += ",L=" + (cfg.l_max > 0 ? std::to_string(cfg.l_max) : std::string("auto"));
  }
  s += ",version=" RELXI_VERSION "\n";
  return s;
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out);
  out << text;
  if (!out) throw ConfigError("cannot write output file '" + cfg.out + "'");
}

std::string orbits_report(const std::vector<BouncingBallOrbit>& orbits) {
  std::string s = "orbit_count=" + std::to_string(orbits.size()) + "\n";
  for (std::size_t k = 0; k < orbits.size(); ++k) {
    const auto& o = orbits[k];
    const std::string p = "orbit." + std::to_string(k) + ".";
    s += p + "obstacles=" + std::to_string(o.endpoints.first.obstacle_index) + "," +
         std::to_string(o.endpoints.second.obstacle_index) + "\n";
    s += p + "length=" + format_value(o.length) + "\n";
    s += p + "shortest=" + (o.shortest ? "true" : "false") + "\n";
    s += p + "c=" + format_value(o.c) + "\n";
    s += p + "det_sqrt=" + format_value(std::sqrt(o.det_factor)) + "\n";
    s += p + "det_sqrt_closed_form=" + format_value(2.0 * chord_length(o) / o.c) + "\n";
    s += p + "r1=" + format_value(o.curvature.r1) + "\n";
    s += p + "rho1=" + format_value(o.curvature.rho1) + "\n";
    if (o.dimension == 3) {
      s += p + "r2=" + format_value(o.curvature.r2) + "\n";
      s += p + "rho2=" + format_value(o.curvature.rho2) + "\n";
      s += p + "theta=" + format_value(o.curvature.theta) + "\n";
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// sweeps with caching

SweepOptions sweep_options(const Config& cfg, bool estimate_error) {
  SweepOptions o;
  o.n = cfg.n;
  o.l_max = cfg.l_max;
  o.estimate_error = estimate_error;
  o.threads = cfg.threads;
  return o;
}

std::vector<XiSample> cached_imaginary_sweep(const Scene& scene, const std::vector<double>& kappas,
                                             const SweepOptions& options, const SampleCache& cache) {
  return parallel_map<XiSample>(kappas.size(), options.threads, [&](std::size_t i) {
    const double kappa = kappas[i];
    const int size = scene.dimension() == 2 ? options.n : options.l_max;
    const std::string key =
        SampleCache::key(options.estimate_error ? "imag_err" : "imag", 0.0, kappa, size);
    if (auto hit = cache.load(key); hit && hit->size() == 4) {
      XiSample s;
      s.lambda = cplx(0.0, kappa);
      s.xi = cplx((*hit)[0], (*hit)[1]);
      s.error_estimate = (*hit)[2];
      s.n = static_cast<int>((*hit)[3]);
      return s;
    }
    const XiSample s = xi_imaginary(scene, kappa, options);
    cache.store(key, {s.xi.real(), s.xi.imag(), s.error_estimate, static_cast<double>(s.n)});
    return s;
  });
}

std::vector<RelShiftSample> cached_real_sweep(const Scene& scene, const std::vector<double>& lambdas, double epsilon,
                                              const Config& cfg, const SampleCache& cache) {
  return parallel_map<RelShiftSample>(lambdas.size(), cfg.threads, [&](std::size_t i) {
    const double lambda = lambdas[i];
    const int n = cfg.n > 0 ? cfg.n : acceptance::real_axis_nodes(lambda);
    const std::string key = SampleCache::key("real", lambda, epsilon, n);
    if (auto hit = cache.load(key); hit && hit->size() == 4) {
      RelShiftSample s;
      s.lambda = lambda;
      s.epsilon = (*hit)[0];
      s.xi_rel = (*hit)[1];
      s.retried = (*hit)[2] != 0.0;
      s.branch_ok = (*hit)[3] != 0.0;
      return s;
    }
    SweepOptions o;
    o.n = n;
    const RelShiftSample s = xi_real_axis(scene, {lambda}, epsilon, o).front();
    cache.store(key, {s.epsilon, s.xi_rel, s.retried ? 1.0 : 0.0, s.branch_ok ? 1.0 : 0.0});
    return s;
  });
}

// ---------------------------------------------------------------------------
// commands

int run_xi(const Scene& scene, const Config& cfg, const SampleCache& cache) {
  if (cfg.grid.empty()) throw ConfigError("xi: --grid is required");
  const auto grid = parse_grid(cfg.grid).values();
  std::string text = provenance(scene, cfg);
  if (cfg.axis == "real") {
    text += "lambda,epsilon,xi_rel\n";
    for (const auto& s : cached_real_sweep(scene, grid, cfg.epsilon, cfg, cache)) {
      text += format_value(s.lambda) + "," + format_value(s.epsilon) + "," + format_value(s.xi_rel) + "\n";
    }
  } else {
    text += "kappa,xi,err\n";
    for (const auto& s : cached_imaginary_sweep(scene, grid, sweep_options(cfg, true), cache)) {
      text += format_value(s.lambda.imag()) + "," + format_value(s.xi.real()) + "," +
              format_value(s.error_estimate) + "\n";
    }
  }
  emit(cfg, text);
  return kExitOk;
}

EnergyOptions energy_options(const Config& cfg) {
  EnergyOptions o;
  o.tol = cfg.tol;
  o.sweep = sweep_options(cfg, false);
  return o;
}

int run_energy(const Scene& scene, const Config& cfg) {
  emit(cfg, provenance(scene, cfg) + report(casimir_energy(scene, energy_options(cfg))));
  return kExitOk;
}

int run_force(const Scene& scene, const Config& cfg) {
  const auto f = casimir_force(scene, cfg.step, energy_options(cfg));
  std::string text = provenance(scene, cfg);
  text += "force=" + format_value(f.force) + "\n";
  text += "error_estimate=" + format_value(f.error_estimate) + "\n";
  text += "step=" + format_value(f.step) + "\n";
  text += "energy_closer=" + format_value(f.closer.energy) + "\n";
  text += "energy_farther=" + format_value(f.farther.energy) + "\n";
  emit(cfg, text);
  return kExitOk;
}

int run_orbits(const Scene& scene, const Config& cfg) {
  std::string text = provenance(scene, cfg);
  text += "delta=" + format_value(scene.delta()) + "\n";
  text += orbits_report(find_bouncing_orbits(scene, 1e-9, true));
  emit(cfg, text);
  return kExitOk;
}

int run_asymptotics(const Scene& scene, const Config& cfg, const SampleCache& cache) {
  const double delta = scene.delta();
  const auto grid = cfg.grid.empty() ? acceptance::decay_window(delta) : parse_grid(cfg.grid).values();
  const auto samples = cached_imaginary_sweep(scene, grid, sweep_options(cfg, false), cache);
  const auto fit = fit_decay(samples, delta);
  std::string text = provenance(scene, cfg);
  text += "delta=" + format_value(delta) + "\n";
  text += "predicted_slope=" + format_value(-2.0 * delta) + "\n";
  std::optional<double> predicted;
  try {
    predicted = predicted_prefactor(find_bouncing_orbits(scene));
  } catch (const DegeneracyError& e) {
    // non-convex endpoints: only the rough bound -2 delta applies
    std::fprintf(stderr, "asymptotics: no prefactor prediction (%s)\n", e.what());
  }
  if (predicted) text += "predicted_prefactor=" + format_value(*predicted) + "\n";
  text += report(fit);
  if (predicted) {
    text += "prefactor_relative_gap=" + format_value(std::abs(fit.prefactor / *predicted - 1.0)) + "\n";
  }
  emit(cfg, text);
  return kExitOk;
}

int run_wavetrace(const Scene& scene, const Config& cfg, const SampleCache& cache) {
  if (scene.dimension() != 2) throw SceneError("wavetrace: planar scene required");
  const double delta = scene.delta();
  std::vector<double> lambdas;
  if (cfg.grid.empty()) {
    const double lambda_max = std::max(40.0, 40.0 / delta);
    for (int k = 1; k <= static_cast<int>(std::llround(4.0 * lambda_max)); ++k) lambdas.push_back(0.25 * k);
  } else {
    const auto g = parse_grid(cfg.grid);
    if (g.logarithmic) throw ConfigError("wavetrace: the lambda grid must be linear");
    lambdas = g.values();
  }
  const auto samples = cached_real_sweep(scene, lambdas, cfg.epsilon, cfg, cache);
  std::vector<double> t_grid;
  for (int j = 1; j <= 600; ++j) t_grid.push_back(0.01 * j * delta);
  const auto w = wave_trace_demo(samples, t_grid, delta, find_bouncing_orbits(scene));
  std::string text = provenance(scene, cfg);
  text += "# t_star=" + format_value(w.t_star) + ",measured_peak=" + format_value(w.measured_peak) +
          ",coefficient=" + format_value(w.coefficient) + ",detected=" + (w.detected ? "true" : "false") +
          ",noise_floor=" + format_value(w.noise_floor) + "\n";
  text += "t,transform\n";
  for (std::size_t j = 0; j < t_grid.size(); ++j) {
    text += format_value(t_grid[j]) + "," + format_value(w.transform[j]) + "\n";
  }
  emit(cfg, text);
  if (!w.detected) std::fprintf(stderr, "wavetrace: no singularity detected\n");
  return kExitOk;
}

/// Acceptance checks that apply to the given scene.
int run_validate(const Scene& scene, const Config& cfg) {
  using namespace acceptance;
  std::vector<Check> checks;
  const auto corpus = std::vector<std::pair<std::string, Scene>>{{cfg.scene_path, scene}};
  if (scene.dimension() == 3) {
    SweepOptions o = sweep_options(cfg, false);
    if (o.l_max == 0) o.l_max = 14;
    for (auto& c : check_decay(scene, make_grid(3.0 / scene.delta(), 8.0 / scene.delta(), 13, true), o, 1, 3, 0.03)) {
      checks.push_back(c);
    }
    checks.push_back(check_truncation(scene, 5.0 / scene.delta()));
    for (const auto& s : scene.obstacles()) checks.push_back(check_sphere_spectrum(std::get<Sphere>(s).radius));
  } else {
    SweepOptions o = sweep_options(cfg, false);
    if (o.n == 0) o.n = 256;
    for (auto& c : check_decay(scene, decay_window(scene.delta()), o, 1, 2, 0.02)) checks.push_back(c);
    checks.push_back(check_quadrature_refinement(scene, 5.0 / scene.delta()));
  }
  checks.push_back(check_invariants(corpus));
  bool ok = true;
  for (const auto& c : checks) {
    std::cout << line(c) << "\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relxi: relative scattering determinants, Casimir energies and bouncing-ball asymptotics"};
  app.set_version_flag("--version", std::string(RELXI_VERSION));
  app.require_subcommand(1);
  Config cfg;

  auto scene_opt = [&](CLI::App* sub) { sub->add_option("--scene", cfg.scene_path, "scene JSON file")->required(); };
  auto common = [&](CLI::App* sub) {
    sub->add_option("--n", cfg.n, "2D nodes per obstacle (0 = automatic)")->check(CLI::NonNegativeNumber);
    sub->add_option("--L", cfg.l_max, "3D harmonic truncation (0 = automatic)")->check(CLI::Range(0, 58));
    sub->add_option("--out", cfg.out, "output file (default stdout)");
    sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--cache-dir", cfg.cache_dir, "sample cache directory (env RELXI_CACHE_DIR)");
  };

  auto* xi = app.add_subcommand("xi", "tabulate Xi on the imaginary axis or xi_rel on the real axis");
  scene_opt(xi);
  common(xi);
  xi->add_option("--grid", cfg.grid, "kappa or lambda grid start:stop:count[log|lin]");
  xi->add_option("--axis", cfg.axis, "imag (kappa,xi,err) or real (lambda,epsilon,xi_rel)")
      ->check(CLI::IsMember({"imag", "real"}));
  xi->add_option("--epsilon", cfg.epsilon, "imaginary offset for the real axis")->check(CLI::PositiveNumber);

  auto* energy = app.add_subcommand("energy", "Casimir interaction energy");
  scene_opt(energy);
  common(energy);
  energy->add_option("--tol", cfg.tol, "absolute tolerance")->check(CLI::PositiveNumber);

  auto* force = app.add_subcommand("force", "Casimir force between two obstacles");
  scene_opt(force);
  common(force);
  force->add_option("--tol", cfg.tol, "energy tolerance")->check(CLI::PositiveNumber);
  force->add_option("--step", cfg.step, "relative displacement h (step = h delta)")->check(CLI::PositiveNumber);

  auto* orbits = app.add_subcommand("orbits", "bouncing-ball orbits and their invariants");
  scene_opt(orbits);
  common(orbits);

  auto* asym = app.add_subcommand("asymptotics", "decay fit of Xi(i kappa) against the orbit prediction");
  scene_opt(asym);
  common(asym);
  asym->add_option("--grid", cfg.grid, "kappa grid (default 2 delta kappa in [8, 20], 13 log points)");

  auto* wave = app.add_subcommand("wavetrace", "windowed sine transform of xi_rel");
  scene_opt(wave);
  common(wave);
  wave->add_option("--grid", cfg.grid, "linear lambda grid (default 0.25 spacing up to 40)");
  wave->add_option("--epsilon", cfg.epsilon, "imaginary offset")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "run the acceptance checks relevant to a scene");
  scene_opt(validate);
  common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  CLI::App* cmd = app.get_subcommands().front();
  try {
    const Scene scene = load_scene(cfg.scene_path);
    const SampleCache cache(cache_dir_for(cfg), scene_hash(scene));
    const std::string name = cmd->get_name();
    if (name == "xi") return run_xi(scene, cfg, cache);
    if (name == "energy") return run_energy(scene, cfg);
    if (name == "force") return run_force(scene, cfg);
    if (name == "orbits") return run_orbits(scene, cfg);
    if (name == "asymptotics") return run_asymptotics(scene, cfg, cache);
    if (name == "wavetrace") return run_wavetrace(scene, cfg, cache);
    return run_validate(scene, cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const InputError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const SceneError& e) {
    std::fprintf(stderr, "scene error: %s\n", e.what());
    return kExitScene;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  }
}
