#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evlat/dlif.hpp"
#include "evlat/epde.hpp"
#include "evlat/quadrature.hpp"
#include "evlat/rng.hpp"

using namespace evlat;

namespace {

EpdeParams zero_params(const EpdeConfig& cfg) {
  Rng rng(0);
  EpdeParams p = EpdeParams::init(cfg, rng);
  for (Tensor* t : p.tensors())
    for (double& v : t->data) v = 0.0;
  return p;
}

double inv_softplus(double y) { return std::log(std::exp(y) - 1.0); }

}  // namespace

TEST_CASE("next_event_params: symmetric initialization gives a uniform mixture") {
  EpdeConfig cfg;
  auto p = zero_params(cfg);
  std::vector<double> features(cfg.feature_dim, 0.0);
  auto mix = next_event_params(0.0, features, p);
  for (int j = 0; j < cfg.K; ++j) {
    CHECK(mix.weights[j] == doctest::Approx(1.0 / cfg.K).epsilon(1e-12));
    CHECK(mix.tau[j] == doctest::Approx(std::log(2.0) + cfg.tau_floor).epsilon(1e-12));
    CHECK(std::fabs(mix.tau[j] - 0.6935) < 1e-3);
  }
}

TEST_CASE("next_event_params: weights always normalize") {
  EpdeConfig cfg;
  Rng rng(8);
  auto p = EpdeParams::init(cfg, rng);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> features;
    for (int i = 0; i < cfg.feature_dim; ++i) features.push_back(rng.uniform(-3.0, 3.0));
    auto mix = next_event_params(rng.uniform(0.0, 5.0), features, p);
    double sum = 0.0;
    for (double w : mix.weights) sum += w;
    CHECK(std::fabs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("next_event_params: random parameter sweep keeps all mixture invariants") {
  EpdeConfig cfg;
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = EpdeParams::init(cfg, rng);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> features;
      for (int i = 0; i < cfg.feature_dim; ++i) features.push_back(rng.uniform(-2.0, 2.0));
      auto mix = next_event_params(rng.uniform(0.0, 3.0), features, p);
      CHECK_NOTHROW(mix.validate());
    }
  }
}

TEST_CASE("next_event_params: feature dimension mismatch") {
  EpdeConfig cfg;
  auto p = zero_params(cfg);
  std::vector<double> wrong(cfg.feature_dim + 1, 0.0);
  CHECK_THROWS_AS(next_event_params(0.0, wrong, p), Error);
}

TEST_CASE("unroll_events: first event beyond the horizon gives an empty window") {
  EpdeConfig cfg;
  auto p = zero_params(cfg);
  // Bias the candidate intervals to twice the window.
  for (int j = 0; j < cfg.K; ++j) p.sb2.data[cfg.K + j] = inv_softplus(2.0);
  std::vector<double> features(cfg.feature_dim, 0.0);
  Rng rng(3);
  auto res = unroll_events(features, 1.0, p, rng, UnrollMode::Expectation);
  CHECK(res.events.channels[0].empty());
  CHECK(res.mixtures.empty());
}

TEST_CASE("unroll_events: deterministic limit produces an even grid of events") {
  EpdeConfig cfg;
  auto p = zero_params(cfg);
  for (int j = 0; j < cfg.K; ++j)
    p.sb2.data[cfg.K + j] = inv_softplus(0.1 - cfg.tau_floor);
  std::vector<double> features(cfg.feature_dim, 0.0);
  Rng rng(3);
  auto res = unroll_events(features, 1.0, p, rng, UnrollMode::Expectation);
  REQUIRE(res.events.channels[0].size() == 10);
  for (size_t k = 0; k < 10; ++k)
    CHECK(res.events.channels[0][k] == doctest::Approx(0.1 * (k + 1)).epsilon(1e-9));
}

TEST_CASE("unroll_events: renewal count concentrates over a thousand seeds") {
  EpdeConfig cfg;
  auto p = zero_params(cfg);
  for (int j = 0; j < cfg.K; ++j) {
    p.sb2.data[cfg.K + j] = inv_softplus(0.1 - cfg.tau_floor);
    p.sb2.data[2 * cfg.K + j] = inv_softplus(0.3 - cfg.s_floor);
  }
  std::vector<double> features(cfg.feature_dim, 0.0);
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    // Mean-matched lognormal intervals with mean 0.1 inside a 1 s window.
    total += static_cast<double>(
        unroll_events(features, 1.0, p, rng, UnrollMode::Hard).events.channels[0].size());
  }
  CHECK(std::fabs(total / 1000.0 - 10.0) < 1.0);
}

TEST_CASE("unroll_events: strict ordering across modes and seeds") {
  EpdeConfig cfg;
  Rng rng(12);
  auto p = EpdeParams::init(cfg, rng);
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    std::vector<double> features;
    for (int i = 0; i < cfg.feature_dim; ++i) features.push_back(rng.uniform(-1.0, 1.0));
    Rng r(seed);
    for (auto mode : {UnrollMode::Hard, UnrollMode::Relaxed, UnrollMode::Expectation}) {
      auto res = unroll_events(features, 2.0, p, r, mode, 0.5);
      CHECK(res.events.strictly_increasing());
      for (double t : res.events.channels[0]) {
        CHECK(t > 0.0);
        CHECK(t <= 2.0);
      }
    }
  }
}

TEST_CASE("unroll_events: expectation step equals previous plus the mixture mean") {
  EpdeConfig cfg;
  Rng rng(14);
  auto p = EpdeParams::init(cfg, rng);
  std::vector<double> features(cfg.feature_dim, 0.2);
  Rng r(1);
  auto res = unroll_events(features, 50.0, p, r, UnrollMode::Expectation);
  REQUIRE(res.mixtures.size() >= 2);
  double prev = 0.0;
  for (size_t k = 0; k < 2; ++k) {
    auto mix = next_event_params(prev, features, p);
    double expected = prev + mixture_mean(mix);
    CHECK(res.events.channels[0][k] == doctest::Approx(expected).epsilon(1e-12));
    prev = expected;
  }
}

TEST_CASE("evolve_ode: zero dynamics leaves the decoded projection unchanged") {
  EpdeConfig cfg;
  cfg.alpha_ode = 0.0;
  Rng rng(5);
  auto p = EpdeParams::init(cfg, rng);
  for (Tensor* t : {&p.field_w1, &p.field_b1, &p.field_w2, &p.field_b2})
    for (double& v : t->data) v = 0.0;
  std::vector<double> features;
  for (int i = 0; i < cfg.feature_dim; ++i) features.push_back(rng.uniform(-1.0, 1.0));
  auto out = evolve_ode(features, 0.0, 1.0, p);

  std::vector<double> y(cfg.ode_hidden, 0.0);
  for (int i = 0; i < cfg.ode_hidden; ++i) {
    y[i] = p.proj_b.data[i];
    for (int j = 0; j < cfg.feature_dim; ++j) y[i] += p.proj_w.at(i, j) * features[j];
  }
  for (int i = 0; i < cfg.decode_dim; ++i) {
    double d = p.dec_b.data[i];
    for (int j = 0; j < cfg.ode_hidden; ++j) d += p.dec_w.at(i, j) * y[j];
    CHECK(out[i] == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("evolve_ode: Euler approaches exponential growth at first order") {
  EpdeConfig cfg;
  cfg.feature_dim = 1;
  cfg.ode_hidden = 1;
  cfg.decode_dim = 1;
  cfg.alpha_ode = 1.0;
  cfg.ode_substeps = 1000;
  auto p = zero_params(cfg);
  p.proj_w.data[0] = 1.0;  // identity projection and decoder
  p.dec_w.data[0] = 1.0;
  std::vector<double> features = {1.0};
  double y1000 = evolve_ode(features, 0.0, 1.0, p)[0];
  CHECK(y1000 == doctest::Approx(2.7169).epsilon(1e-3));
  const double e = std::exp(1.0);
  CHECK(std::fabs(y1000 - e) < 2e-3);
  CHECK(std::fabs(y1000 - e) > 1e-3);

  cfg.ode_substeps = 2000;
  p.cfg = cfg;
  double y2000 = evolve_ode(features, 0.0, 1.0, p)[0];
  double ratio = std::fabs(y1000 - e) / std::fabs(y2000 - e);
  CHECK(ratio > 1.8);
  CHECK(ratio < 2.2);
}

TEST_CASE("rate_proxy: reciprocal of the active mixture mean") {
  auto mk = [](double mean) { return make_lognormal_mixture({1.0}, {mean}, {0.3}); };

  std::vector<double> grid;
  for (int i = 0; i <= 100; ++i) grid.push_back(0.125 * i / 100.0);
  auto proxy = rate_proxy({mk(0.125)}, grid);
  for (double t : {0.0, 0.06, 0.125}) CHECK(proxy(t) == doctest::Approx(8.0).epsilon(1e-9));

  std::vector<double> grid2;
  for (int i = 0; i <= 300; ++i) grid2.push_back(0.3 * i / 300.0);
  auto two = rate_proxy({mk(0.1), mk(0.2)}, grid2);
  CHECK(two(0.05) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(two(0.25) == doctest::Approx(5.0).epsilon(1e-9));
  // One grid cell of linear ramp around the step boundary at t = 0.1.
  double before = two(0.099), mid = two(0.1005), after = two(0.102);
  CHECK(before >= mid);
  CHECK(mid >= after);

  auto r_hat = [&](double t) { return proxy(t); };
  auto r_tilde = [](double) { return 8.0; };
  CHECK(lif_consistency(r_hat, r_tilde, 0.125, 200) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected next-event identity on closed-form exponential posteriors") {
  // With q(u) = lambda e^{-lambda (u - prev)} for u >= prev, the integral
  // int_prev^inf u q(u) du collapses to prev + 1/lambda.
  for (double lambda : {2.0, 7.5, 20.0}) {
    for (double prev : {0.0, 0.4, 1.3}) {
      double phi = quad_adaptive(
          [&](double u) { return u * lambda * std::exp(-lambda * (u - prev)); }, prev,
          prev + 60.0 / lambda, 1e-10);
      CHECK(phi == doctest::Approx(prev + 1.0 / lambda).epsilon(1e-7));
    }
  }
}

TEST_CASE("unroll gradient flow: soft event count responds to parameters") {
  EpdeConfig cfg;
  cfg.feature_dim = 4;
  cfg.hidden = 8;
  Rng rng(42);
  auto params = EpdeParams::init(cfg, rng);
  std::vector<double> features = {0.3, -0.2, 0.5, 0.1};
  const double window = 1.0, width = 0.05, temp = 0.5;
  const int n_steps = 12;

  auto soft_count = [&](const EpdeParams& p, Rng draw, Tape* tape, Var* out,
                        std::vector<Var>* sb2_vars) {
    if (!tape) {
      // Plain replay with the same draw stream.
      double prev = 0.0, acc = 0.0;
      for (int i = 0; i < n_steps; ++i) {
        auto mix = next_event_params(prev, features, p);
        double tau = sample_interval(mix, draw, SampleMode::Relaxed, temp);
        prev += tau;
        acc += sigmoid((window - prev) / width);
      }
      return acc;
    }
    EpdeParamVars vars = bind_epde(*tape, p);
    if (sb2_vars) sb2_vars->push_back(vars.sb2);
    Tensor f(cfg.feature_dim, 1);
    f.data = features;
    Var fv = tape->constant(f);
    Var prev = tape->constant(0.0);
    Var acc = tape->constant(0.0);
    for (int i = 0; i < n_steps; ++i) {
      MixtureVars mix = next_event_params_tape(*tape, prev, fv, vars, cfg);
      Var tau = sample_interval_tape(*tape, mix, draw, SampleMode::Relaxed, temp);
      prev = prev + tau;
      acc = acc + sigmoid((window - prev) * (1.0 / width));
    }
    *out = acc;
    return value_of(acc);
  };

  Tape tape;
  Var count;
  std::vector<Var> sb2_vars;
  Rng draw(777);
  soft_count(params, draw, &tape, &count, &sb2_vars);
  tape.backward(count);
  auto grad = tape.grad_tensor(sb2_vars[0]);

  double gnorm = 0.0;
  for (double g : grad.data) gnorm += g * g;
  CHECK(gnorm > 0.0);

  const int probe = cfg.K;  // first candidate-interval bias
  const double h = 1e-4;
  auto up = params, dn = params;
  up.sb2.data[probe] += h;
  dn.sb2.data[probe] -= h;
  double fd = (soft_count(up, Rng(777), nullptr, nullptr, nullptr) -
               soft_count(dn, Rng(777), nullptr, nullptr, nullptr)) /
              (2.0 * h);
  CHECK(std::fabs(grad.data[probe] - fd) / std::max(1e-6, std::fabs(fd)) < 0.05);
}
