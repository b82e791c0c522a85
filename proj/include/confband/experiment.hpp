#pragma once

// Monte Carlo harness: repeated sample / split / fit / test cycles that
// estimate conditional coverage and band size for several methods at once.

#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "confband/conformal.hpp"
#include "confband/efficiency.hpp"
#include "confband/grid.hpp"
#include "confband/rng.hpp"
#include "confband/scenario.hpp"

namespace confband {

enum class Method { s0, sigma, sbar, naive, pointwise };

inline std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::s0: return "s0";
    case Method::sigma: return "sigma";
    case Method::sbar: return "sbar";
    case Method::naive: return "naive";
    case Method::pointwise: return "pointwise";
  }
  return "s0";
}

inline Method method_from_string(std::string_view s) {
  if (s == "s0") return Method::s0;
  if (s == "sigma") return Method::sigma;
  if (s == "sbar") return Method::sbar;
  if (s == "naive") return Method::naive;
  if (s == "pointwise") return Method::pointwise;
  throw Error(ErrorCode::invalid_argument, "unknown method '" + std::string(s) + "'");
}

inline bool is_conformal(Method m) noexcept { return m == Method::s0 || m == Method::sigma || m == Method::sbar; }

inline ModulationSpec modulation_for(Method m) {
  switch (m) {
    case Method::sigma: return ModulationSpec::sigma();
    case Method::sbar: return ModulationSpec::sbar();
    default: return ModulationSpec::zero();
  }
}

/// Fits one method's band. `tau` selects the smoothed variant for the
/// conformal modulations; naive and pointwise ignore it.
inline PredictionBand fit_method(Method method, const FunctionalSample& sample, double alpha,
                                 const SplitIndices& sp, std::optional<double> tau = std::nullopt) {
  switch (method) {
    case Method::naive: return naive_band(sample, alpha);
    case Method::pointwise: return pointwise_band(sample, alpha, sp);
    default: break;
  }
  if (tau) return fit_band_smoothed(sample, alpha, sp, mean_predictor, modulation_for(method), *tau);
  return fit_band(sample, alpha, sp, mean_predictor, modulation_for(method));
}

/// Fraction of `test` curves inside the band.
inline double coverage_fraction(const PredictionBand& band, const FunctionalSample& test) {
  if (test.empty()) throw Error(ErrorCode::empty_sample, "no test curves");
  std::size_t hits = 0;
  for (const Curve& y : test) hits += contains(band, y) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test.size());
}

inline double empirical_conditional_coverage(const PredictionBand& band, const ScenarioGenerator& gen,
                                             std::size_t m, Engine& rng) {
  if (band.full_space) return 1.0;
  return coverage_fraction(band, gen.draw_sample(m, rng));
}

inline double empirical_conditional_coverage(const PredictionBand& band, const ScenarioConfig& config,
                                             std::size_t m, Engine& rng) {
  return empirical_conditional_coverage(band, ScenarioGenerator(config), m, rng);
}

/// Per grid point, the fraction of test curves whose value there lies in the band.
inline Curve pointwise_coverage(const PredictionBand& band, const FunctionalSample& test) {
  if (test.empty()) throw Error(ErrorCode::empty_sample, "no test curves");
  require_same_grid(band.lower.grid(), test.grid());
  std::vector<double> frac(test.grid().size(), 0.0);
  for (const Curve& y : test) {
    for (std::size_t i = 0; i < frac.size(); ++i) frac[i] += contains_at(band, i, y[i]) ? 1.0 : 0.0;
  }
  for (double& f : frac) f /= static_cast<double>(test.size());
  return Curve(test.grid_ptr(), std::move(frac));
}

inline Curve pointwise_coverage_curve(const PredictionBand& band, const ScenarioGenerator& gen, std::size_t m,
                                      Engine& rng) {
  return pointwise_coverage(band, gen.draw_sample(m, rng));
}

inline Curve pointwise_coverage_curve(const PredictionBand& band, const ScenarioConfig& config, std::size_t m,
                                      Engine& rng) {
  return pointwise_coverage_curve(band, ScenarioGenerator(config), m, rng);
}

struct ExperimentConfig {
  ScenarioConfig scenario;
  double alpha = 0.1;
  double rho = 0.5;
  std::size_t replications = 500;
  std::size_t test_curves = 10000;
  std::vector<Method> methods{Method::s0, Method::sigma, Method::sbar, Method::naive};
  bool smoothed = false;
  std::uint64_t master_seed = 1;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct ReplicationRecord {
  std::size_t index = 0;
  std::uint64_t split_seed = 0;
  std::optional<double> tau;
  std::vector<double> coverage;  // one entry per method, config order
  std::vector<double> q;
  std::optional<std::string> error;
};

struct CoverageRow {
  Method method{};
  std::size_t replications = 0;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;   // 99% t-interval for the unconditional coverage
  double ci_high = 0.0;
  bool ci_includes_nominal = false;
};

struct CoverageReport {
  ScenarioTag scenario{};
  std::size_t n = 0;
  std::size_t l = 0;
  double alpha = 0.0;
  double nominal = 0.0;
  /// 1 - floor((l+1) alpha)/(l+1); 1 - alpha for smoothed bands.
  double theoretical = 0.0;
  bool smoothed = false;
  std::vector<CoverageRow> rows;
};

struct SizeRow {
  Method method{};
  std::size_t replications = 0;
  double mean_q = 0.0;
  double sd_q = 0.0;
};

struct SizeReport {
  ScenarioTag scenario{};
  std::size_t n = 0;
  std::vector<SizeRow> rows;
};

struct ExperimentResult {
  CoverageReport coverage;
  SizeReport size;
  std::vector<ReplicationRecord> records;
  std::vector<std::string> failures;
};

namespace detail {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t count = 0;
};

inline MeanSd mean_sd(const std::vector<double>& x) {
  MeanSd out;
  out.count = x.size();
  if (x.empty()) return out;
  for (double v : x) out.mean += v;
  out.mean /= static_cast<double>(x.size());
  if (x.size() < 2) return out;
  double ss = 0.0;
  for (double v : x) ss += (v - out.mean) * (v - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
  return out;
}

inline ReplicationRecord run_replication(const ExperimentConfig& cfg, const ScenarioGenerator& gen,
                                         std::size_t index) {
  ReplicationRecord rec;
  rec.index = index;
  Engine rng = make_engine(cfg.master_seed, index);
  try {
    const FunctionalSample sample = gen.draw_sample(cfg.scenario.n, rng);
    rec.split_seed = rng();
    const SplitIndices sp = split(sample.size(), cfg.rho, rec.split_seed);
    if (cfg.smoothed) rec.tau = uniform01(rng);
    const FunctionalSample test = gen.draw_sample(cfg.test_curves, rng);
    for (Method m : cfg.methods) {
      const PredictionBand band = fit_method(m, sample, cfg.alpha, sp, is_conformal(m) ? rec.tau : std::nullopt);
      rec.coverage.push_back(band.full_space ? 1.0 : coverage_fraction(band, test));
      rec.q.push_back(band_size(band).q);
    }
  } catch (const std::exception& e) {
    rec.coverage.clear();
    rec.q.clear();
    rec.error = e.what();
  }
  return rec;
}

}  // namespace detail

/// Runs every replication (possibly on several threads) and folds the
/// records in index order, so the result depends only on the config.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  check_alpha(cfg.alpha);
  if (cfg.replications < 1 || cfg.test_curves < 1) {
    throw Error(ErrorCode::invalid_argument, "replications and test_curves must be >= 1");
  }
  if (cfg.methods.empty()) throw Error(ErrorCode::invalid_argument, "no methods requested");
  const ScenarioGenerator gen(cfg.scenario);
  // Validates n and rho up front.
  const std::size_t l = split(cfg.scenario.n, cfg.rho, 0).calibration.size();

  ExperimentResult result;
  result.records.resize(cfg.replications);
  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.replications));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < cfg.replications; i = next++) {
      result.records[i] = detail::run_replication(cfg, gen, i);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  CoverageReport& cov = result.coverage;
  cov.scenario = cfg.scenario.scenario;
  cov.n = cfg.scenario.n;
  cov.l = l;
  cov.alpha = cfg.alpha;
  cov.nominal = 1.0 - cfg.alpha;
  cov.smoothed = cfg.smoothed;
  cov.theoretical = cfg.smoothed ? 1.0 - cfg.alpha : theoretical_coverage(l, cfg.alpha);
  result.size.scenario = cfg.scenario.scenario;
  result.size.n = cfg.scenario.n;

  for (const auto& rec : result.records) {
    if (rec.error) result.failures.push_back("replication " + std::to_string(rec.index) + ": " + *rec.error);
  }
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    std::vector<double> c, q;
    for (const auto& rec : result.records) {
      if (rec.error) continue;
      c.push_back(rec.coverage[k]);
      q.push_back(rec.q[k]);
    }
    const auto cs = detail::mean_sd(c);
    CoverageRow row{cfg.methods[k], cs.count, cs.mean, cs.sd, cs.mean, cs.mean, false};
    if (cs.count >= 2) {
      const boost::math::students_t dist(static_cast<double>(cs.count - 1));
      const double half = boost::math::quantile(boost::math::complement(dist, 0.005)) * cs.sd /
                          std::sqrt(static_cast<double>(cs.count));
      row.ci_low = cs.mean - half;
      row.ci_high = cs.mean + half;
    }
    row.ci_includes_nominal = row.ci_low <= cov.nominal && cov.nominal <= row.ci_high;
    cov.rows.push_back(row);
    const auto qs = detail::mean_sd(q);
    result.size.rows.push_back({cfg.methods[k], qs.count, qs.mean, qs.sd});
  }
  return result;
}

}  // namespace confband
