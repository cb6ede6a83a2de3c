#pragma once

#include <vector>

#include "evlat/errors.hpp"
#include "evlat/rng.hpp"
#include "evlat/tape.hpp"

namespace evlat {

/// Log-mean that makes a lognormal's mean equal tau: mu = ln(tau) - s^2/2.
double mean_match_mu(double tau, double s);

// Lognormal mixture over inter-event intervals. Component log-means are
// derived from the candidate mean intervals by mean matching, so
// exp(mu_j + s_j^2/2) == tau_j holds by construction.
struct LognormalMixture {
  std::vector<double> weights;
  std::vector<double> tau;  // candidate mean intervals (seconds)
  std::vector<double> s;    // log-scales
  std::vector<double> mu;   // derived log-means

  int K() const { return static_cast<int>(weights.size()); }
  void validate() const;
};

LognormalMixture make_lognormal_mixture(std::vector<double> weights, std::vector<double> tau,
                                        std::vector<double> s);

/// Closed-form mixture mean sum_j w_j tau_j.
double mixture_mean(const LognormalMixture& mix);

double mixture_density(double tau, const LognormalMixture& mix);

/// Mass of the mixture on [0, horizon], closed form via erf.
double mixture_mass_below(const LognormalMixture& mix, double horizon);

/// KL between two lognormals: log(sp/sq) + (sq^2 + (muq-mup)^2)/(2 sp^2) - 1/2.
double kl_lognormal(double muq, double sq, double mup, double sp);

/// Component-wise upper bound on KL(mixture || single-lognormal prior):
/// sum_j w_j KL(comp_j || prior) + sum_j w_j log(w_j K) (uniform weight prior).
double kl_mixture_to_prior(const LognormalMixture& mix, double prior_mu, double prior_s);

enum class SampleMode { Hard, Relaxed };

/// Pathwise interval sample; relaxed mode uses Gumbel-Softmax over the
/// component choice at the given temperature.
double sample_interval(const LognormalMixture& mix, Rng& rng, SampleMode mode,
                       double temperature = 0.5);

// ---- tape-side counterparts (per-component scalars as tape nodes) ----

struct MixtureVars {
  std::vector<Var> weights;
  std::vector<Var> tau;
  std::vector<Var> s;
  std::vector<Var> mu;

  int K() const { return static_cast<int>(weights.size()); }
  LognormalMixture values() const;
};

/// Derives mu vars by mean matching and fills mix.mu.
void mean_match_tape(MixtureVars& mix);

Var mixture_density_tape(Tape& tape, double t, const MixtureVars& mix);
Var mixture_mass_below_tape(Tape& tape, const MixtureVars& mix, double horizon);
Var mixture_mean_tape(Tape& tape, const MixtureVars& mix);
Var kl_mixture_to_prior_tape(Tape& tape, const MixtureVars& mix, double prior_mu, double prior_s);

/// Sampled interval as a tape node; rng draws are recorded as constants so
/// gradients are pathwise.
Var sample_interval_tape(Tape& tape, const MixtureVars& mix, Rng& rng, SampleMode mode,
                         double temperature = 0.5);

}  // namespace evlat
