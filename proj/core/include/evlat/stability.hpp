#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evlat/rng.hpp"

namespace evlat {

struct StabilityTrial {
  int trial = 0;
  double max_entry_dev = 0.0;
  double frob_dev = 0.0;
  double entry_bound = 0.0;
  double frob_bound = 0.0;
  double frob_avg_bound = 0.0;  // (alpha/MS) sum ||Xi||_F, per-trial
  bool entry_violation = false;
  bool frob_violation = false;
};

struct StabilityTailRow {
  double tau = 0.0;
  double bound = 0.0;
  double empirical = 0.0;
  double slack = 0.0;
  bool ok = true;
};

// Reporting harness over synthetic lag-noise ensembles: base lags are drawn
// Uniform(-1, 1), noise is added per (grid x sample) slot, and both
// adjacencies are rebuilt through the exponential edge map.
struct StabilityReport {
  std::string check;
  std::string noise_model;
  int channels = 0;
  double alpha = 0.0;
  double noise_param = 0.0;  // eps_inf or sigma
  int ms = 0;
  int trials = 0;
  std::uint64_t seed = 0;

  std::vector<StabilityTrial> records;
  std::vector<StabilityTailRow> tail;

  double mean_abs_dev = 0.0;
  double mean_abs_bound = 0.0;
  double mean_abs_slack = 0.0;
  double mean_frob_dev = 0.0;
  double mean_frob_bound = 0.0;
  double mean_frob_slack = 0.0;

  int violations = 0;

  std::string to_json() const;
  std::string to_csv() const;
};

/// Uniform(-eps_inf, eps_inf) noise; asserts |Delta_ij| <= alpha eps_inf and
/// the Frobenius bounds on every trial. Throws TheoremViolation on failure.
StabilityReport run_deterministic_check(int channels, double alpha, double eps_inf, int ms,
                                        int trials, Rng& rng);

/// Gaussian noise; for each tau checks the empirical tail frequency of
/// |Delta_ij| >= tau against 2 exp(-ms tau^2 / (2 alpha^2 sigma^2)) plus
/// three binomial standard errors.
StabilityReport run_subgaussian_check(int channels, double alpha, double sigma, int ms,
                                      int trials, const std::vector<double>& tau_grid, Rng& rng);

/// Gaussian noise; checks E|Delta_ij| <= alpha sigma sqrt(2/pi) (+3 SE) and
/// the Frobenius expectation bound.
StabilityReport run_gaussian_expectation_check(int channels, double alpha, double sigma, int ms,
                                               int trials, Rng& rng);

}  // namespace evlat
