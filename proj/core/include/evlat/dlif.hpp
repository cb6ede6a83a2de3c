#pragma once

#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "evlat/errors.hpp"
#include "evlat/events.hpp"
#include "evlat/rng.hpp"

namespace evlat {

/// Firing rate implied by a membrane drive b > 1: r = [-log(1 - 1/b)]^{-1}.
/// Strictly positive and strictly increasing in b.
double drive_to_rate(double b);

/// Smooth refractory recovery 1 - exp(-(t - t_last)/rho), floored at 1e-6 so
/// the gate stays inside (0, 1].
double refractory_gate(double t, double t_last, double rho);

constexpr double kGateFloor = 1e-6;

/// Effective input drive b(t) > 1: constant, tabulated with linear
/// interpolation, or an arbitrary callable.
class DriveFunction {
 public:
  static DriveFunction constant(double b);
  static DriveFunction tabulated(std::vector<double> ts, std::vector<double> bs);
  static DriveFunction from_callable(std::function<double(double)> fn);

  double operator()(double t) const;

 private:
  std::function<double(double)> eval_;
};

// Bounded hazard r(t) on [0, horizon]. Bounds [lo, hi] are part of the type:
// every construction validates 0 < lo <= hi < inf and evaluation is clipped
// into the declared band so downstream theorem machinery can rely on it.
class RateFunction {
 public:
  static RateFunction constant(double r, double lo, double hi);
  static RateFunction tabulated(std::vector<double> ts, std::vector<double> rs, double lo,
                                double hi);
  static RateFunction from_drive(const DriveFunction& drive, double lo, double hi);
  static RateFunction from_callable(std::function<double(double)> fn, double lo, double hi);

  double operator()(double t) const;
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  /// Attach a refractory gate; gated evaluation needs the current last-event
  /// time, so it is exposed separately from operator().
  void set_refractory(double rho) { rho_ = rho; }
  bool has_refractory() const { return rho_ > 0.0; }
  double refractory_rho() const { return rho_; }
  double gated(double t, double t_last) const;

  // CSV round-trip for the tabulated form: lines of "t,r".
  void to_csv(std::ostream& os) const;
  static RateFunction from_csv(std::istream& is, double lo, double hi);

  bool is_tabulated() const { return !table_t_.empty(); }

 private:
  RateFunction() = default;

  std::function<double(double)> eval_;
  std::vector<double> table_t_, table_r_;
  double lo_ = 0.0, hi_ = 0.0;
  double rho_ = 0.0;
};

/// Renewal inter-event density r(t) exp(-int_0^t r), with the inner integral
/// by adaptive quadrature.
double dlif_density(const RateFunction& r, double t, double tol);

// Ogata-style thinning against the constant majorant hi(). The hazard is the
// renewal hazard r evaluated at elapsed time since the last accepted event
// (virtual event at 0), times the refractory gate when one is attached.
EventRealization sample_renewal(const RateFunction& r, double horizon, Rng& rng);

/// Trapezoidal int_0^horizon (r_hat - r_tilde)^2 dt on a uniform grid.
double lif_consistency(const std::function<double(double)>& r_hat,
                       const std::function<double(double)>& r_tilde, double horizon, int grid);

}  // namespace evlat
