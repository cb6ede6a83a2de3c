#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "evlat/ivp_kl.hpp"
#include "evlat/melp.hpp"
#include "evlat/rng.hpp"

namespace evlat::testutil {

struct BatteryProblem {
  std::string name;
  KlProblem problem;
};

// 20 randomized (q, r) pairs: q cycles exponential / lognormal / K=3 mixture
// (each truncated and renormalized to [0, S]), r alternates constant and
// tabulated. All well inside the theorem's eps range at eps = 1e-5, S = 10.
inline std::vector<BatteryProblem> kl_test_battery(std::uint64_t seed, double eps = 1e-5) {
  const double S = 10.0;
  Rng rng(seed);
  std::vector<BatteryProblem> out;
  for (int i = 0; i < 20; ++i) {
    BatteryProblem bp;
    KlProblem& p = bp.problem;
    p.horizon = S;
    p.eps = eps;

    if (i % 2 == 0) {
      double r = rng.uniform(0.5, 3.0);
      p.r = RateFunction::constant(r, 0.4, 3.6);
      bp.name = "r=const" + std::to_string(r);
    } else {
      std::vector<double> ts, rs;
      double level = rng.uniform(0.8, 2.0);
      for (double t = 0.0; t <= S + 0.25; t += 0.5) {
        level = std::min(3.0, std::max(0.5, level + rng.uniform(-0.3, 0.3)));
        ts.push_back(t);
        rs.push_back(level);
      }
      p.r = RateFunction::tabulated(ts, rs, 0.4, 3.6);
      bp.name = "r=table";
    }

    switch (i % 3) {
      case 0: {
        double lam = rng.uniform(0.5, 3.0);
        double z = 1.0 - std::exp(-lam * S);
        p.q = [lam, z, S](double t) {
          if (t < 0.0 || t > S) return 0.0;
          return lam * std::exp(-lam * t) / z;
        };
        bp.name += " q=exp";
        break;
      }
      case 1: {
        double m = rng.uniform(0.2, 1.5);
        double s = rng.uniform(0.3, 0.8);
        auto mix = make_lognormal_mixture({1.0}, {m}, {s});
        double z = mixture_mass_below(mix, S);
        p.q = [mix, z, S](double t) {
          if (t <= 0.0 || t > S) return 0.0;
          return mixture_density(t, mix) / z;
        };
        bp.name += " q=logn";
        break;
      }
      default: {
        double w0 = rng.uniform(0.2, 0.6), w1 = rng.uniform(0.1, 0.3);
        std::vector<double> w = {w0, w1, 1.0 - w0 - w1};
        std::vector<double> tau = {rng.uniform(0.1, 0.5), rng.uniform(0.4, 1.0),
                                   rng.uniform(0.8, 1.5)};
        std::vector<double> s = {rng.uniform(0.2, 0.6), rng.uniform(0.2, 0.6),
                                 rng.uniform(0.2, 0.6)};
        auto mix = make_lognormal_mixture(w, tau, s);
        double z = mixture_mass_below(mix, S);
        p.q = [mix, z, S](double t) {
          if (t <= 0.0 || t > S) return 0.0;
          return mixture_density(t, mix) / z;
        };
        bp.name += " q=mix3";
        break;
      }
    }
    out.push_back(std::move(bp));
  }
  return out;
}

}  // namespace evlat::testutil
