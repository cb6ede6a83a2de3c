#pragma once

#include <cmath>
#include <functional>

#include "evlat/errors.hpp"
#include "evlat/tape.hpp"

namespace evlat {

// Fixed-step RK4 for the pure quadrature problem y' = g(m), y(m0) = 0.
// Templated on the scalar type so the same stepping builds either plain
// doubles or tape expressions. The field does not depend on y, so the two
// interior stages coincide and g is evaluated once per half-step.
template <class S, class Field>
S rk4_integrate(Field&& g, double m0, double m1, int steps, S zero) {
  const double h = (m1 - m0) / static_cast<double>(steps);
  S acc = zero;
  S left = g(m0);
  for (int i = 0; i < steps; ++i) {
    const double m = m0 + h * static_cast<double>(i);
    S kmid = g(m + 0.5 * h);
    S right = g(m + h);
    acc = acc + (h / 6.0) * (left + 4.0 * kmid + right);
    left = right;
  }
  return acc;
}

/// RK4 solution G(m1) of G' = g(m), G(m0) = 0.
inline double ode_solve_scalar(const std::function<double(double)>& g, double m0, double m1,
                               int steps) {
  if (!(m0 < m1)) throw Error(ErrorKind::DomainError, "ode_solve_scalar requires m0 < m1");
  if (steps < 1) throw Error(ErrorKind::DomainError, "ode_solve_scalar requires steps >= 1");
  auto checked = [&](double m) {
    double v = g(m);
    if (!std::isfinite(v))
      throw Error(ErrorKind::NonFiniteVectorField,
                  "vector field returned " + std::to_string(v) + " at m=" + std::to_string(m));
    return v;
  };
  return rk4_integrate<double>(checked, m0, m1, steps, 0.0);
}

}  // namespace evlat
