#pragma once

#include <functional>

#include "evlat/errors.hpp"

namespace evlat {

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals = 0;
};

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b] to absolute
/// tolerance tol. Intervals are bisected until the local Kronrod error
/// estimate fits a length-proportional share of tol; the total interval
/// count is capped at 2^16.
QuadResult quad_adaptive_full(const std::function<double(double)>& f, double a, double b,
                              double tol);

double quad_adaptive(const std::function<double(double)>& f, double a, double b, double tol);

}  // namespace evlat
