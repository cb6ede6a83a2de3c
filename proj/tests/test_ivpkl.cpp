#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evlat/ivp_kl.hpp"
#include "evlat/melp.hpp"
#include "evlat/tape.hpp"
#include "support/kl_battery.hpp"

using namespace evlat;

namespace {

// Exponential density truncated and renormalized to [0, S].
KlProblem truncated_exp_problem(double lambda_q, double rate, double s_horizon, double eps) {
  KlProblem p;
  double z = 1.0 - std::exp(-lambda_q * s_horizon);
  p.q = [lambda_q, z, s_horizon](double t) {
    if (t < 0.0 || t > s_horizon) return 0.0;
    return lambda_q * std::exp(-lambda_q * t) / z;
  };
  p.r = RateFunction::constant(rate, rate, rate);
  p.horizon = s_horizon;
  p.eps = eps;
  return p;
}

// KL(Exp(a) || Exp(b)) = log(a/b) + b/a - 1 (truncation corrections < 1e-8).
double exp_kl_closed_form(double a, double b) { return std::log(a / b) + b / a - 1.0; }

}  // namespace

TEST_CASE("kl_integrand_g: truncated Exp(1) against a unit rate at M = 1") {
  auto p = truncated_exp_problem(1.0, 1.0, 10.0, 1e-5);
  double g = kl_integrand_g(-std::exp(-1.0), p);
  // Only the truncation constant survives in the log ratio.
  CHECK(g == doctest::Approx(4.54e-5).epsilon(0.01));
}

TEST_CASE("kl_integrand_g: vanishes when q matches the prior density") {
  KlProblem p;
  p.q = [](double t) { return t >= 0.0 && t <= 10.0 ? std::exp(-t) : 0.0; };
  p.r = RateFunction::constant(1.0, 1.0, 1.0);
  p.horizon = 10.0;
  p.eps = 1e-5;
  CHECK(std::fabs(kl_integrand_g(-std::exp(-1.0), p)) < 1e-14);
}

TEST_CASE("kl_integrand_g: finite at the horizon endpoint") {
  auto p = truncated_exp_problem(2.0, 1.0, 10.0, 1e-5);
  double g = kl_integrand_g(-std::exp(-10.0), p);
  CHECK(std::isfinite(g));
}

TEST_CASE("kl_integrand_g: domain errors") {
  auto p = truncated_exp_problem(1.0, 1.0, 10.0, 1e-5);
  CHECK_THROWS_AS(kl_integrand_g(0.1, p), Error);
  CHECK_THROWS_AS(kl_integrand_g(0.0, p), Error);
  CHECK_THROWS_AS(kl_integrand_g(-1.5, p), Error);
}

TEST_CASE("kl_oracle: zero when q equals the prior") {
  KlProblem p;
  p.q = [](double t) { return t >= 0.0 && t <= 10.0 ? std::exp(-t) : 0.0; };
  p.r = RateFunction::constant(1.0, 1.0, 1.0);
  p.horizon = 10.0;
  p.eps = 1e-5;
  CHECK(std::fabs(kl_oracle(p, 1e-9)) < 1e-8);
}

TEST_CASE("kl_oracle: closed forms for exponential pairs") {
  auto p1 = truncated_exp_problem(2.0, 1.0, 10.0, 1e-5);
  CHECK(std::fabs(kl_oracle(p1, 1e-9) - exp_kl_closed_form(2.0, 1.0)) < 1e-6);
  auto p2 = truncated_exp_problem(1.0, 2.0, 10.0, 1e-5);
  CHECK(std::fabs(kl_oracle(p2, 1e-9) - exp_kl_closed_form(1.0, 2.0)) < 1e-5);
}

TEST_CASE("kl_bound: tight when q is the prior itself") {
  KlProblem p;
  double z = 1.0 - std::exp(-10.0);
  p.q = [z](double t) { return t >= 0.0 && t <= 10.0 ? std::exp(-t) / z : 0.0; };
  p.r = RateFunction::constant(1.0, 1.0, 1.0);
  p.horizon = 10.0;
  p.eps = 1e-4;
  auto b = kl_bound(p, 2048);
  CHECK(b.u_eps >= 0.0);
  CHECK(b.u_eps <= 5e-4);
}

TEST_CASE("kl_bound: exponential pair hits the oracle within 1e-3") {
  auto p = truncated_exp_problem(2.0, 1.0, 10.0, 1e-5);
  auto b = kl_bound(p, 4096);
  double oracle = kl_oracle(p, 1e-8);
  CHECK(std::fabs(b.u_eps - 0.19315) <= 1e-3);
  CHECK(b.u_eps >= oracle - 1e-6);
}

TEST_CASE("kl_bound: epsilon ladder decreases toward the oracle") {
  double oracle = kl_oracle(truncated_exp_problem(2.0, 1.0, 10.0, 1e-5), 1e-9);
  double prev_gap = 1e9;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
    auto p = truncated_exp_problem(2.0, 1.0, 10.0, eps);
    auto b = kl_bound(p, 4096);
    double gap = b.u_eps - oracle;
    CHECK(gap <= prev_gap + 1e-9);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-4);
}

TEST_CASE("kl_bound: change-of-variables identity at eps -> 0") {
  auto p = truncated_exp_problem(2.0, 1.0, 10.0, 1e-7);
  auto b = kl_bound(p, 8192);
  double oracle = kl_oracle(p, 1e-9);
  CHECK(std::fabs(b.g_eps - oracle) < 1e-3);
}

TEST_CASE("kl_bound: dominance over the 20-problem battery") {
  auto battery = testutil::kl_test_battery(31337);
  REQUIRE(battery.size() == 20);
  for (const auto& bp : battery) {
    double oracle = kl_oracle(bp.problem, 1e-8);
    auto b = kl_bound(bp.problem, 4096);
    INFO(bp.name, " oracle=", oracle, " u=", b.u_eps);
    CHECK(b.u_eps >= oracle - 1e-6);
    CHECK(bp.problem.eps_in_theorem_range());
  }
}

TEST_CASE("kl_bound: tape path agrees with the plain path and differentiates") {
  // q is a K=2 lognormal mixture truncated to [0, S]; the tape carries the
  // mixture parameters, the plain path re-evaluates the same density.
  const double S = 6.0, eps = 1e-3;
  const double r_prior = 2.0;
  const int steps = 512;

  std::vector<double> w = {0.4, 0.6};
  std::vector<double> tau = {0.3, 0.8};
  std::vector<double> s = {0.4, 0.5};

  auto eval_plain = [&](const std::vector<double>& tauv) {
    auto mix = make_lognormal_mixture(w, tauv, s);
    double z = mixture_mass_below(mix, S);
    KlProblem p;
    p.q = [mix, z, S](double t) {
      if (t <= 0.0 || t > S) return 0.0;
      return mixture_density(t, mix) / z;
    };
    p.r = RateFunction::constant(r_prior, r_prior, r_prior);
    p.horizon = S;
    p.eps = eps;
    return kl_bound(p, steps).u_eps;
  };

  Tape tape;
  MixtureVars mix;
  for (int j = 0; j < 2; ++j) {
    mix.weights.push_back(tape.constant(w[j]));
    mix.tau.push_back(tape.param(Tensor::scalar(tau[j])));
    mix.s.push_back(tape.constant(s[j]));
  }
  mean_match_tape(mix);
  Var mass = mixture_mass_below_tape(tape, mix, S);
  Var inv_z = 1.0 / mass;
  auto qfn = [&](double t) -> std::optional<Var> {
    if (t <= 0.0 || t > S) return std::nullopt;
    Var d = mixture_density_tape(tape, t, mix);
    if (value_of(d) < 1e-280) return std::nullopt;
    return d * inv_z;
  };
  auto log_prior = [&](double t) { return std::log(r_prior) - r_prior * t; };
  auto parts = kl_bound_parts<Var>(qfn, log_prior, S, eps, steps, tape.constant(0.0));
  Var u = parts.g_eps + abs(parts.g_2eps - parts.g_eps);

  CHECK(value_of(u) == doctest::Approx(eval_plain(tau)).epsilon(1e-10));

  tape.backward(u);
  const double h = 1e-5;
  for (int j = 0; j < 2; ++j) {
    auto up = tau, dn = tau;
    up[j] += h;
    dn[j] -= h;
    double fd = (eval_plain(up) - eval_plain(dn)) / (2.0 * h);
    double ad = tape.grad_scalar(mix.tau[j]);
    CHECK(std::fabs(ad - fd) / std::max(1e-6, std::fabs(fd)) < 1e-3);
  }
}

TEST_CASE("KlProblem: validation and theorem range") {
  auto p = truncated_exp_problem(1.0, 1.0, 10.0, 1e-5);
  CHECK_NOTHROW(p.validate());
  CHECK(p.eps_in_theorem_range());
  p.eps = 1e-2;  // outside (0, e^{-10}) but still integrable
  CHECK_NOTHROW(p.validate());
  CHECK_FALSE(p.eps_in_theorem_range());
  p.eps = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
