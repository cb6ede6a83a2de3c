#include "evlat/ivp_kl.hpp"

#include <algorithm>
#include <cmath>

namespace evlat {

RateIntegral::RateIntegral(const RateFunction& r, double t_max, int table_size) {
  t_max_ = t_max;
  if (!r.is_tabulated()) {
    // Probe: constant rates are the common fast path.
    double r0 = r(0.0), r1 = r(0.5 * t_max), r2 = r(t_max);
    if (r0 == r1 && r1 == r2) {
      constant_ = true;
      rate_ = r0;
      return;
    }
  }
  dt_ = t_max / static_cast<double>(table_size);
  cum_.resize(static_cast<size_t>(table_size) + 1, 0.0);
  double prev = r(0.0);
  for (int i = 1; i <= table_size; ++i) {
    double cur = r(dt_ * static_cast<double>(i));
    cum_[i] = cum_[i - 1] + 0.5 * dt_ * (prev + cur);
    prev = cur;
  }
}

double RateIntegral::operator()(double t) const {
  if (constant_) return rate_ * t;
  if (t <= 0.0) return 0.0;
  if (t >= t_max_) {
    // r is clipped to its declared band, so extend with the last slope.
    double slope = (cum_.back() - cum_[cum_.size() - 2]) / dt_;
    return cum_.back() + slope * (t - t_max_);
  }
  double x = t / dt_;
  size_t i = static_cast<size_t>(x);
  double w = x - static_cast<double>(i);
  return cum_[i] + w * (cum_[i + 1] - cum_[i]);
}

void KlProblem::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorKind::DomainError, "KL problem requires finite horizon S > 0");
  if (!(eps > 0.0) || !(eps < 1.0))
    throw Error(ErrorKind::DomainError, "KL problem requires eps in (0, 1)");
}

double kl_integrand_g(double m, const KlProblem& problem) {
  if (!(m < 0.0) || m < -1.0)
    throw Error(ErrorKind::OutOfDomain,
                "kl_integrand_g requires m in [-1, 0), got " + std::to_string(m));
  double t = -std::log(-m);
  double qv = problem.q(t);
  if (qv <= 0.0) return 0.0;
  RateIntegral hazard(problem.r, std::max(problem.horizon, t));
  double log_prior = std::log(problem.r(t)) - hazard(t);
  return (-1.0 / m) * qv * (std::log(qv) - log_prior);
}

std::vector<KlLeg> kl_bound_legs(double support_max, double eps, int ode_steps,
                                 std::size_t* idx_2eps) {
  const double t_end = -std::log(eps);
  const double t_2eps = std::max(0.0, -std::log(std::min(2.0 * eps, 1.0)));

  std::vector<double> ts;
  ts.push_back(0.0);
  for (double t = 1.0; t < t_end; t += 1.0) ts.push_back(t);
  ts.push_back(t_end);
  if (support_max > 0.0 && support_max < t_end) ts.push_back(support_max);
  if (t_2eps > 0.0 && t_2eps < t_end) ts.push_back(t_2eps);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(),
                       [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
           ts.end());

  double total = ts.back();
  std::vector<KlLeg> legs;
  legs.reserve(ts.size());
  if (idx_2eps) *idx_2eps = 0;
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    KlLeg leg;
    leg.m0 = -std::exp(-ts[i]);
    leg.m1 = -std::exp(-ts[i + 1]);
    double frac = (ts[i + 1] - ts[i]) / total;
    leg.steps = std::max(8, static_cast<int>(std::ceil(frac * ode_steps)));
    leg.beyond_support = ts[i] >= support_max;
    legs.push_back(leg);
    if (idx_2eps && std::fabs(ts[i + 1] - t_2eps) < 1e-12)
      *idx_2eps = legs.size();
  }
  return legs;
}

KlBoundResult kl_bound(const KlProblem& problem, int ode_steps) {
  problem.validate();
  if (ode_steps < 1) throw Error(ErrorKind::DomainError, "kl_bound requires ode_steps >= 1");

  const double t_end = -std::log(problem.eps);
  RateIntegral hazard(problem.r, std::max(problem.horizon, t_end));
  auto log_prior = [&](double t) { return std::log(problem.r(t)) - hazard(t); };
  auto q = [&](double t) -> std::optional<double> {
    double v = problem.q(t);
    if (v <= 0.0) return std::nullopt;
    return v;
  };

  auto parts =
      kl_bound_parts<double>(q, log_prior, problem.horizon, problem.eps, ode_steps, 0.0);
  KlBoundResult out;
  out.g_eps = parts.g_eps;
  out.g_2eps = parts.g_2eps;
  out.tail = std::fabs(parts.g_2eps - parts.g_eps);
  out.u_eps = parts.g_eps + out.tail;
  return out;
}

double kl_oracle(const KlProblem& problem, double tol) {
  problem.validate();
  if (!(tol > 0.0)) throw Error(ErrorKind::DomainError, "kl_oracle requires tol > 0");
  RateIntegral hazard(problem.r, problem.horizon);
  auto integrand = [&](double t) {
    double qv = problem.q(t);
    if (qv <= 0.0) return 0.0;
    double log_prior = std::log(problem.r(t)) - hazard(t);
    return qv * (std::log(qv) - log_prior);
  };
  return quad_adaptive(integrand, 0.0, problem.horizon, tol);
}

}  // namespace evlat
