#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "evlat/dlif.hpp"
#include "evlat/errors.hpp"
#include "evlat/ode.hpp"
#include "evlat/quadrature.hpp"

namespace evlat {

// KL(q || p_r) machinery for a density q on [0, S] against the renewal prior
// p_r(t) = r(t) exp(-int_0^t r). The change of variables m = -e^{-t} maps
// t in [0, inf) to m in [-1, 0); integrating the transformed integrand from
// m = -1 up to -eps covers t in [0, log(1/eps)], so any eps < e^{-S} makes the
// surrogate G(-eps) complete over the support of q and the tail term
// |G(-2 eps) - G(-eps)| can only add.

/// Cumulative hazard int_0^t r, exact for constant rates, dense trapezoid
/// table otherwise.
class RateIntegral {
 public:
  RateIntegral(const RateFunction& r, double t_max, int table_size = 8192);
  double operator()(double t) const;

 private:
  bool constant_ = false;
  double rate_ = 0.0;
  double t_max_ = 0.0;
  double dt_ = 0.0;
  std::vector<double> cum_;
};

struct KlProblem {
  std::function<double(double)> q;  // density evaluator; must return 0 beyond the support
  RateFunction r;
  double horizon;  // S
  double eps;

  void validate() const;
  /// Theorem-guaranteed range for the upper bound: eps in (0, e^{-S}).
  bool eps_in_theorem_range() const { return eps > 0.0 && eps < std::exp(-horizon); }
};

/// Transformed integrand g(m) with M = -log(-m); zero wherever q(M) = 0.
double kl_integrand_g(double m, const KlProblem& problem);

struct KlBoundResult {
  double u_eps = 0.0;
  double g_eps = 0.0;
  double g_2eps = 0.0;
  double tail = 0.0;
};

/// Computable upper bound U_eps = G(-eps) + |G(-2 eps) - G(-eps)| obtained by
/// fixed-step RK4 integration of g over m in [-1, -eps].
KlBoundResult kl_bound(const KlProblem& problem, int ode_steps);

/// Direct t-space quadrature of the KL integral; the verification oracle.
double kl_oracle(const KlProblem& problem, double tol);

// ---- shared integration core ----

struct KlLeg {
  double m0, m1;
  int steps;
  bool beyond_support;  // q == 0 over the whole leg
};

/// Breakpoints are placed at unit steps of t = -log(-m) (so the RK4 error
/// does not concentrate near m -> 0-) plus exact splits at t = S and
/// t = log(1/(2 eps)); the -2 eps split index is returned.
std::vector<KlLeg> kl_bound_legs(double support_max, double eps, int ode_steps,
                                 std::size_t* idx_2eps);

template <class Scal>
struct KlBoundParts {
  Scal g_eps;
  Scal g_2eps;
};

// QFn: double t -> std::optional<Scal>; nullopt means q is structurally zero
// at t (no tape nodes are emitted there). log_prior: t -> log p_r(t).
template <class Scal, class QFn>
KlBoundParts<Scal> kl_bound_parts(QFn&& q, const std::function<double(double)>& log_prior,
                                  double support_max, double eps, int ode_steps, Scal zero) {
  std::size_t idx_2eps = 0;
  auto legs = kl_bound_legs(support_max, eps, ode_steps, &idx_2eps);

  auto field = [&](double m) -> Scal {
    double t = -std::log(-m);
    auto qv = q(t);
    if (!qv) return zero;
    using std::log;
    return (-1.0 / m) * (*qv) * (log(*qv) - log_prior(t));
  };

  Scal acc = zero;
  Scal g_2eps = zero;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    if (!legs[i].beyond_support)
      acc = acc + rk4_integrate<Scal>(field, legs[i].m0, legs[i].m1, legs[i].steps, zero);
    if (i + 1 == idx_2eps) g_2eps = acc;
  }
  return {acc, g_2eps};
}

}  // namespace evlat
