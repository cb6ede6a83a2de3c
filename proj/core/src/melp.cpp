#include "evlat/melp.hpp"

#include <cmath>

namespace evlat {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
}  // namespace

double mean_match_mu(double tau, double s) {
  if (!(tau > 0.0) || !(s > 0.0))
    throw Error(ErrorKind::DomainError, "mean_match_mu requires tau > 0 and s > 0");
  return std::log(tau) - 0.5 * s * s;
}

void LognormalMixture::validate() const {
  const int k = K();
  if (k < 1 || static_cast<int>(tau.size()) != k || static_cast<int>(s.size()) != k ||
      static_cast<int>(mu.size()) != k)
    throw Error(ErrorKind::ShapeError, "mixture component arrays disagree");
  double wsum = 0.0;
  for (int j = 0; j < k; ++j) {
    if (weights[j] < 0.0) throw Error(ErrorKind::DomainError, "negative mixture weight");
    if (!(tau[j] > 0.0)) throw Error(ErrorKind::DomainError, "non-positive candidate interval");
    if (!(s[j] > 0.0)) throw Error(ErrorKind::DomainError, "non-positive log-scale");
    wsum += weights[j];
    double mean = std::exp(mu[j] + 0.5 * s[j] * s[j]);
    if (std::fabs(mean - tau[j]) > 1e-9 * (1.0 + tau[j]))
      throw Error(ErrorKind::DomainError, "mean matching violated at component " + std::to_string(j));
  }
  if (std::fabs(wsum - 1.0) > 1e-9)
    throw Error(ErrorKind::DomainError, "mixture weights sum to " + std::to_string(wsum));
}

LognormalMixture make_lognormal_mixture(std::vector<double> weights, std::vector<double> tau,
                                        std::vector<double> s) {
  LognormalMixture mix;
  mix.weights = std::move(weights);
  mix.tau = std::move(tau);
  mix.s = std::move(s);
  mix.mu.resize(mix.tau.size());
  for (size_t j = 0; j < mix.tau.size(); ++j) mix.mu[j] = mean_match_mu(mix.tau[j], mix.s[j]);
  mix.validate();
  return mix;
}

double mixture_mean(const LognormalMixture& mix) {
  double m = 0.0;
  for (int j = 0; j < mix.K(); ++j) m += mix.weights[j] * mix.tau[j];
  return m;
}

double mixture_density(double tau, const LognormalMixture& mix) {
  if (!(tau > 0.0)) throw Error(ErrorKind::DomainError, "mixture density requires tau > 0");
  double acc = 0.0;
  double lt = std::log(tau);
  for (int j = 0; j < mix.K(); ++j) {
    double z = (lt - mix.mu[j]) / mix.s[j];
    acc += mix.weights[j] / (tau * mix.s[j] * kSqrt2Pi) * std::exp(-0.5 * z * z);
  }
  return acc;
}

double mixture_mass_below(const LognormalMixture& mix, double horizon) {
  if (!(horizon > 0.0)) return 0.0;
  double lt = std::log(horizon);
  double acc = 0.0;
  for (int j = 0; j < mix.K(); ++j)
    acc += mix.weights[j] * 0.5 * (1.0 + std::erf((lt - mix.mu[j]) / (mix.s[j] * kSqrt2)));
  return acc;
}

double kl_lognormal(double muq, double sq, double mup, double sp) {
  if (!(sq > 0.0) || !(sp > 0.0))
    throw Error(ErrorKind::DomainError, "kl_lognormal requires positive scales");
  double d = muq - mup;
  return std::log(sp / sq) + (sq * sq + d * d) / (2.0 * sp * sp) - 0.5;
}

double kl_mixture_to_prior(const LognormalMixture& mix, double prior_mu, double prior_s) {
  double acc = 0.0;
  const double kinv = 1.0 / static_cast<double>(mix.K());
  for (int j = 0; j < mix.K(); ++j) {
    acc += mix.weights[j] * kl_lognormal(mix.mu[j], mix.s[j], prior_mu, prior_s);
    if (mix.weights[j] > 0.0) acc += mix.weights[j] * std::log(mix.weights[j] / kinv);
  }
  return acc;
}

double sample_interval(const LognormalMixture& mix, Rng& rng, SampleMode mode,
                       double temperature) {
  mix.validate();
  if (mode == SampleMode::Hard) {
    double u = rng.uniform();
    int k = mix.K() - 1;
    double cum = 0.0;
    for (int j = 0; j < mix.K(); ++j) {
      cum += mix.weights[j];
      if (u < cum) {
        k = j;
        break;
      }
    }
    double eps = rng.normal();
    return std::exp(mix.mu[k] + mix.s[k] * eps);
  }
  if (!(temperature > 0.0))
    throw Error(ErrorKind::InvalidTemperature,
                "relaxed sampling requires temperature > 0, got " + std::to_string(temperature));
  // Gumbel-Softmax over the component choice.
  std::vector<double> logits(mix.K());
  double mx = -1e300;
  for (int j = 0; j < mix.K(); ++j) {
    double lw = mix.weights[j] > 0.0 ? std::log(mix.weights[j]) : -745.0;
    logits[j] = (lw + rng.gumbel()) / temperature;
    mx = std::max(mx, logits[j]);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  double mu_soft = 0.0, s_soft = 0.0;
  for (int j = 0; j < mix.K(); ++j) {
    double y = logits[j] / z;
    mu_soft += y * mix.mu[j];
    s_soft += y * mix.s[j];
  }
  double eps = rng.normal();
  return std::exp(mu_soft + s_soft * eps);
}

// ---- tape-side ----

LognormalMixture MixtureVars::values() const {
  LognormalMixture mix;
  for (int j = 0; j < K(); ++j) {
    mix.weights.push_back(value_of(weights[j]));
    mix.tau.push_back(value_of(tau[j]));
    mix.s.push_back(value_of(s[j]));
    mix.mu.push_back(value_of(mu[j]));
  }
  return mix;
}

void mean_match_tape(MixtureVars& mix) {
  mix.mu.clear();
  for (int j = 0; j < mix.K(); ++j)
    mix.mu.push_back(log(mix.tau[j]) - 0.5 * square(mix.s[j]));
}

Var mixture_density_tape(Tape& tape, double t, const MixtureVars& mix) {
  if (!(t > 0.0)) throw Error(ErrorKind::DomainError, "mixture density requires tau > 0");
  const double lt = std::log(t);
  Var acc = tape.constant(0.0);
  for (int j = 0; j < mix.K(); ++j) {
    Var z = (lt - mix.mu[j]) / mix.s[j];
    Var comp = exp(-0.5 * square(z)) / (mix.s[j] * (t * kSqrt2Pi));
    acc = acc + mix.weights[j] * comp;
  }
  return acc;
}

Var mixture_mass_below_tape(Tape& tape, const MixtureVars& mix, double horizon) {
  const double lt = std::log(horizon);
  Var acc = tape.constant(0.0);
  for (int j = 0; j < mix.K(); ++j) {
    Var z = (lt - mix.mu[j]) / (kSqrt2 * mix.s[j]);
    acc = acc + mix.weights[j] * (0.5 * (erf(z) + 1.0));
  }
  return acc;
}

Var mixture_mean_tape(Tape& tape, const MixtureVars& mix) {
  Var acc = tape.constant(0.0);
  for (int j = 0; j < mix.K(); ++j) acc = acc + mix.weights[j] * mix.tau[j];
  return acc;
}

Var kl_mixture_to_prior_tape(Tape& tape, const MixtureVars& mix, double prior_mu, double prior_s) {
  const double kinv = 1.0 / static_cast<double>(mix.K());
  Var acc = tape.constant(0.0);
  for (int j = 0; j < mix.K(); ++j) {
    Var d = mix.mu[j] - prior_mu;
    Var comp_kl = (std::log(prior_s) - log(mix.s[j])) +
                  (square(mix.s[j]) + square(d)) / (2.0 * prior_s * prior_s) - 0.5;
    acc = acc + mix.weights[j] * comp_kl;
    acc = acc + mix.weights[j] * (log(mix.weights[j]) - std::log(kinv));
  }
  return acc;
}

Var sample_interval_tape(Tape& tape, const MixtureVars& mix, Rng& rng, SampleMode mode,
                         double temperature) {
  if (mode == SampleMode::Hard) {
    double u = rng.uniform();
    int k = mix.K() - 1;
    double cum = 0.0;
    for (int j = 0; j < mix.K(); ++j) {
      cum += value_of(mix.weights[j]);
      if (u < cum) {
        k = j;
        break;
      }
    }
    double eps = rng.normal();
    return exp(mix.mu[k] + eps * mix.s[k]);
  }
  if (!(temperature > 0.0))
    throw Error(ErrorKind::InvalidTemperature,
                "relaxed sampling requires temperature > 0, got " + std::to_string(temperature));
  std::vector<Var> logit_parts;
  for (int j = 0; j < mix.K(); ++j)
    logit_parts.push_back((log(mix.weights[j]) + rng.gumbel()) / temperature);
  Var y = softmax(tape.concat(logit_parts));
  Var mu_soft = tape.constant(0.0);
  Var s_soft = tape.constant(0.0);
  for (int j = 0; j < mix.K(); ++j) {
    Var yj = tape.index(y, j);
    mu_soft = mu_soft + yj * mix.mu[j];
    s_soft = s_soft + yj * mix.s[j];
  }
  double eps = rng.normal();
  return exp(mu_soft + eps * s_soft);
}

}  // namespace evlat
