// confband: fit, simulate and compare functional prediction bands.
//
// Exit codes: 0 ok, 1 usage/config, 2 I/O, 3 statistics.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "confband/confband.hpp"

namespace fs = std::filesystem;
using namespace confband;

namespace {

constexpr int exit_config = 1;
constexpr int exit_io = 2;
constexpr int exit_statistics = 3;

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return exit_config;
    case ErrorKind::io: return exit_io;
    case ErrorKind::statistics: return exit_statistics;
  }
  return exit_config;
}

std::optional<std::string> file_spec(const std::string& value) {
  if (value.rfind("file:", 0) == 0) return value.substr(5);
  return std::nullopt;
}

Curve single_curve(const std::string& path, const Grid& grid, const char* what) {
  const auto s = read_curves(path);
  if (s.size() != 1) throw Error(ErrorCode::invalid_argument, std::string(what) + " file must hold exactly one curve");
  require_same_grid(s.grid(), grid);
  return s[0];
}

ModulationSpec parse_modulation(const std::string& value, const Grid& grid) {
  if (auto path = file_spec(value)) return ModulationSpec::custom(single_curve(*path, grid, "modulation"));
  switch (modulation_kind_from_string(value)) {
    case ModulationKind::s_zero: return ModulationSpec::zero();
    case ModulationKind::s_sigma: return ModulationSpec::sigma();
    case ModulationKind::s_bar_training: return ModulationSpec::sbar();
    default: throw Error(ErrorCode::invalid_argument, "unsupported modulation '" + value + "'");
  }
}

PredictorRule parse_predictor(const std::string& value, const Grid& grid) {
  if (value == "mean") return mean_predictor;
  if (auto path = file_spec(value)) {
    Curve fixed = single_curve(*path, grid, "predictor");
    return [fixed](const FunctionalSample&) { return fixed; };
  }
  throw Error(ErrorCode::invalid_argument, "unsupported predictor '" + value + "'");
}

std::vector<Method> parse_methods(const std::vector<std::string>& names) {
  if (names.empty()) throw Error(ErrorCode::invalid_argument, "at least one method is required");
  std::vector<Method> out;
  for (const auto& n : names) out.push_back(method_from_string(n));
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create directory '" + dir + "': " + ec.message());
}

// band ------------------------------------------------------------------

struct BandArgs {
  std::string input;
  double alpha = 0.1;
  double rho = 0.5;
  std::uint64_t seed = 1;
  std::string modulation = "s0";
  std::string predictor = "mean";
  bool smoothed = false;
  std::optional<double> tau;
  std::optional<double> truncate_at;
  std::string output;
  std::string table;
};

int run_band(const BandArgs& a) {
  const auto table = read_curve_table(a.input);
  const FunctionalSample& sample = table.sample;
  const auto sp = split(sample.size(), a.rho, a.seed);
  const auto spec = parse_modulation(a.modulation, sample.grid());
  const auto predictor = parse_predictor(a.predictor, sample.grid());

  PredictionBand band = [&] {
    if (!a.smoothed) return fit_band(sample, a.alpha, sp, predictor, spec);
    double tau = 0.0;
    if (a.tau) {
      tau = *a.tau;
    } else {
      Engine rng = make_engine(a.seed, 0x7a0);
      tau = uniform01(rng);
    }
    return fit_band_smoothed(sample, a.alpha, sp, predictor, spec, tau);
  }();
  if (band.full_space) {
    std::cerr << "warning: alpha " << a.alpha << " is below 1/(l+1) with l = " << sp.calibration.size()
              << "; the band is the whole space\n";
  }
  if (a.truncate_at && !band.full_space) band = truncate(band, *a.truncate_at);

  write_band(a.output, BandRecord{band, a.alpha, a.modulation, a.predictor, a.rho, a.seed});
  std::string table_path = a.table;
  if (table_path.empty()) table_path = fs::path(a.output).replace_extension(".csv").string();
  write_band_table(table_path, band);

  const auto size = band_size(band);
  std::cout << "m=" << sp.training.size() << " l=" << sp.calibration.size() << " radius=" << format_double(band.radius_scale)
            << " closed=" << (band.closed ? 1 : 0) << " full_space=" << (band.full_space ? 1 : 0);
  if (!size.infinite) std::cout << " Q=" << format_double(size.q) << " average_width=" << format_double(size.average_width);
  std::cout << '\n';
  return 0;
}

// simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string scenario = "S1";
  std::size_t n = 198;
  double beta = 0.06;
  std::size_t p = 101;
  std::size_t replications = 500;
  std::size_t test_curves = 10000;
  double alpha = 0.1;
  double rho = 0.5;
  std::vector<std::string> methods{"s0", "sigma", "sbar", "naive"};
  std::uint64_t seed = 1;
  bool smoothed = false;
  unsigned threads = 0;
  std::string out_dir = ".";
};

int run_simulate(const SimulateArgs& a) {
  ExperimentConfig cfg;
  cfg.scenario.scenario = scenario_from_string(a.scenario);
  cfg.scenario.n = a.n;
  cfg.scenario.beta = a.beta;
  cfg.scenario.grid = make_uniform_grid(0.0, 1.0, a.p);
  cfg.scenario.seed = a.seed;
  cfg.alpha = a.alpha;
  cfg.rho = a.rho;
  cfg.replications = a.replications;
  cfg.test_curves = a.test_curves;
  cfg.methods = parse_methods(a.methods);
  cfg.smoothed = a.smoothed;
  cfg.master_seed = a.seed;
  cfg.threads = a.threads;

  const auto res = run_experiment(cfg);
  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  write_coverage_report((dir / "coverage.csv").string(), res.coverage);
  write_size_report((dir / "size.csv").string(), res.size);
  write_replications((dir / "replications.csv").string(), res, cfg.methods);

  std::cout << to_string(res.coverage.scenario) << " n=" << res.coverage.n << " l=" << res.coverage.l
            << " theoretical=" << format_double(res.coverage.theoretical) << '\n';
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    const auto& c = res.coverage.rows[k];
    const auto& s = res.size.rows[k];
    std::cout << "  " << to_string(c.method) << " coverage=" << c.mean << " [" << c.ci_low << ", " << c.ci_high
              << "] Q=" << s.mean_q << '\n';
  }
  if (!res.failures.empty()) {
    for (const auto& f : res.failures) std::cerr << "error: " << f << '\n';
    return exit_statistics;
  }
  return 0;
}

// compare ---------------------------------------------------------------

struct CompareArgs {
  std::string input;
  std::string scenario;
  std::size_t n = 198;
  std::size_t p = 101;
  double beta = 0.06;
  double alpha = 0.1;
  double rho = 0.5;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;
  std::optional<double> tau;
  std::optional<double> truncate_at;
  std::string test;
  std::size_t test_curves = 0;
  std::string out_dir = ".";
};

int run_compare(const CompareArgs& a) {
  const auto methods = parse_methods(a.methods);
  std::optional<ScenarioConfig> scen;
  FunctionalSample sample = [&] {
    if (!a.input.empty()) return read_curves(a.input);
    if (a.scenario.empty()) throw Error(ErrorCode::invalid_argument, "compare needs --input or --scenario");
    ScenarioConfig cfg;
    cfg.scenario = scenario_from_string(a.scenario);
    cfg.n = a.n;
    cfg.beta = a.beta;
    cfg.grid = make_uniform_grid(0.0, 1.0, a.p);
    cfg.seed = a.seed;
    scen = cfg;
    return gen_scenario(cfg);
  }();
  const auto sp = split(sample.size(), a.rho, a.seed);

  std::vector<PredictionBand> bands;
  for (Method m : methods) {
    PredictionBand b = fit_method(m, sample, a.alpha, sp, is_conformal(m) ? a.tau : std::nullopt);
    if (b.full_space) std::cerr << "warning: " << to_string(m) << " band is the whole space\n";
    if (a.truncate_at && !b.full_space) b = truncate(b, *a.truncate_at);
    bands.push_back(std::move(b));
  }

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  const Grid& grid = sample.grid();
  {
    const auto path = (dir / "bands.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << 't';
    for (Method m : methods) out << ",lower_" << to_string(m) << ",center_" << to_string(m) << ",upper_" << to_string(m);
    out << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << format_double(grid[i]);
      for (const auto& b : bands) {
        out << ',' << format_double(b.lower[i]) << ',' << format_double(b.center[i]) << ',' << format_double(b.upper[i]);
      }
      out << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
  }
  {
    const auto path = (dir / "summary.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << "method,radius,q,average_width,closed,full_space\n";
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto s = band_size(bands[k]);
      out << to_string(methods[k]) << ',' << format_double(bands[k].radius_scale) << ',' << format_double(s.q) << ','
          << format_double(s.average_width) << ',' << (bands[k].closed ? 1 : 0) << ','
          << (bands[k].full_space ? 1 : 0) << '\n';
      std::cout << to_string(methods[k]) << " Q=" << format_double(s.q)
                << " average_width=" << format_double(s.average_width) << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
  }

  // Subset check between the pointwise and simultaneous s0 bands.
  const auto find = [&](Method m) -> const PredictionBand* {
    for (std::size_t k = 0; k < methods.size(); ++k) {
      if (methods[k] == m) return &bands[k];
    }
    return nullptr;
  };
  const PredictionBand* pw = find(Method::pointwise);
  const PredictionBand* s0 = find(Method::s0);
  if (pw && s0) {
    std::size_t outside = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (pw->lower[i] < s0->lower[i] || pw->upper[i] > s0->upper[i]) ++outside;
    }
    std::cout << "subset check: pointwise band inside s0 band at " << grid.size() - outside << '/' << grid.size()
              << " grid points (" << (outside == 0 ? "PASS" : "FAIL") << ")\n";
  }

  std::optional<FunctionalSample> test;
  if (!a.test.empty()) {
    test = read_curves(a.test);
  } else if (scen && a.test_curves > 0) {
    Engine rng = make_engine(a.seed, 0xc0ffee);
    test = ScenarioGenerator(*scen).draw_sample(a.test_curves, rng);
  }
  if (test) {
    require_same_grid(test->grid(), grid);
    std::vector<Curve> cov;
    for (const auto& b : bands) cov.push_back(pointwise_coverage(b, *test));
    const auto path = (dir / "pointwise_coverage.csv").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    out << 't';
    for (Method m : methods) out << ",coverage_" << to_string(m);
    out << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out << format_double(grid[i]);
      for (const auto& c : cov) out << ',' << format_double(c[i]);
      out << '\n';
    }
    if (!out) throw Error(ErrorCode::io, "failed writing '" + path + "'");
    for (std::size_t k = 0; k < methods.size(); ++k) {
      std::cout << to_string(methods[k]) << " simultaneous coverage=" << coverage_fraction(bands[k], *test) << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction bands for functional data"};
  app.require_subcommand(1);

  BandArgs band;
  auto* band_cmd = app.add_subcommand("band", "Fit a band to a curve table");
  band_cmd->add_option("--input,-i", band.input, "Curve table (first row: grid)")->required();
  band_cmd->add_option("--alpha", band.alpha, "Miscoverage level")->capture_default_str();
  band_cmd->add_option("--rho", band.rho, "Calibration fraction")->capture_default_str();
  band_cmd->add_option("--seed", band.seed, "Split seed")->capture_default_str();
  band_cmd->add_option("--modulation", band.modulation, "s0, sigma, sbar or file:<path>")->capture_default_str();
  band_cmd->add_option("--predictor", band.predictor, "mean or file:<path>")->capture_default_str();
  band_cmd->add_flag("--smoothed", band.smoothed, "Randomized tie-breaking");
  band_cmd->add_option("--tau", band.tau, "Fixed tau for --smoothed (drawn from the seed otherwise)")
      ->check(CLI::Range(0.0, 1.0));
  band_cmd->add_option("--truncate", band.truncate_at, "Clip the lower bound at this value");
  band_cmd->add_option("--output,-o", band.output, "Band record (JSON)")->required();
  band_cmd->add_option("--table", band.table, "Plot table (t,lower,center,upper); defaults next to --output");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coverage and size study");
  // The config file is read by the top-level app; keys live in a [simulate] section.
  app.set_config("--config", "", "Key-value experiment config ([simulate] section)");
  sim_cmd->fallthrough();
  sim_cmd->add_option("--scenario", sim.scenario, "S1, S2 or S3")->capture_default_str();
  sim_cmd->add_option("--n", sim.n, "Sample size")->capture_default_str();
  sim_cmd->add_option("--beta", sim.beta, "Contamination probability (S3)")->capture_default_str();
  sim_cmd->add_option("--p", sim.p, "Grid points on [0, 1]")->capture_default_str();
  sim_cmd->add_option("--N,--replications", sim.replications, "Replications")->capture_default_str();
  sim_cmd->add_option("--M,--test-curves", sim.test_curves, "Test curves per replication")->capture_default_str();
  sim_cmd->add_option("--alpha", sim.alpha, "Miscoverage level")->capture_default_str();
  sim_cmd->add_option("--rho", sim.rho, "Calibration fraction")->capture_default_str();
  sim_cmd->add_option("--methods", sim.methods, "Subset of s0 sigma sbar naive pointwise")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
  sim_cmd->add_flag("--smoothed", sim.smoothed, "Smoothed conformal bands");
  sim_cmd->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")->capture_default_str();
  sim_cmd->add_option("--out-dir", sim.out_dir, "Report directory")->capture_default_str();

  CompareArgs cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Fit several methods on one sample");
  auto* in_opt = cmp_cmd->add_option("--input,-i", cmp.input, "Curve table");
  cmp_cmd->add_option("--scenario", cmp.scenario, "Simulate data instead of reading it")->excludes(in_opt);
  cmp_cmd->add_option("--n", cmp.n, "Sample size for --scenario")->capture_default_str();
  cmp_cmd->add_option("--p", cmp.p, "Grid points for --scenario")->capture_default_str();
  cmp_cmd->add_option("--beta", cmp.beta, "Contamination probability (S3)")->capture_default_str();
  cmp_cmd->add_option("--alpha", cmp.alpha, "Miscoverage level")->capture_default_str();
  cmp_cmd->add_option("--rho", cmp.rho, "Calibration fraction")->capture_default_str();
  cmp_cmd->add_option("--seed", cmp.seed, "Split (and scenario) seed")->capture_default_str();
  cmp_cmd->add_option("--methods", cmp.methods, "Methods to fit")->required()->expected(1, -1);
  cmp_cmd->add_option("--tau", cmp.tau, "Smoothed conformal with this tau")->check(CLI::Range(0.0, 1.0));
  cmp_cmd->add_option("--truncate", cmp.truncate_at, "Clip lower bounds at this value");
  cmp_cmd->add_option("--test", cmp.test, "Test curves for pointwise coverage");
  cmp_cmd->add_option("--M,--test-curves", cmp.test_curves, "Simulated test curves (with --scenario)");
  cmp_cmd->add_option("--out-dir", cmp.out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    if (*band_cmd) return run_band(band);
    if (*sim_cmd) return run_simulate(sim);
    if (*cmp_cmd) return run_compare(cmp);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_statistics;
  }
  return exit_config;
}
