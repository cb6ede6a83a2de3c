#include "evlat/dlif.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evlat/quadrature.hpp"

namespace evlat {

double drive_to_rate(double b) {
  if (!(b > 1.0))
    throw Error(ErrorKind::InvalidDrive, "drive must exceed 1, got " + std::to_string(b));
  return 1.0 / (-std::log1p(-1.0 / b));
}

double refractory_gate(double t, double t_last, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::DomainError, "refractory rho must be positive");
  if (t < t_last) throw Error(ErrorKind::DomainError, "refractory_gate requires t >= t_last");
  double g = -std::expm1(-(t - t_last) / rho);
  return std::max(g, kGateFloor);
}

namespace {

double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  size_t i = static_cast<size_t>(it - xs.begin());
  double w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return ys[i - 1] + w * (ys[i] - ys[i - 1]);
}

}  // namespace

DriveFunction DriveFunction::constant(double b) {
  if (!(b > 1.0)) throw Error(ErrorKind::InvalidDrive, "constant drive must exceed 1");
  DriveFunction d;
  d.eval_ = [b](double) { return b; };
  return d;
}

DriveFunction DriveFunction::tabulated(std::vector<double> ts, std::vector<double> bs) {
  if (ts.size() != bs.size() || ts.size() < 2)
    throw Error(ErrorKind::ShapeError, "tabulated drive needs >= 2 matching samples");
  for (double b : bs)
    if (!(b > 1.0)) throw Error(ErrorKind::InvalidDrive, "tabulated drive must exceed 1 everywhere");
  DriveFunction d;
  d.eval_ = [ts = std::move(ts), bs = std::move(bs)](double t) {
    return interp_linear(ts, bs, t);
  };
  return d;
}

DriveFunction DriveFunction::from_callable(std::function<double(double)> fn) {
  DriveFunction d;
  d.eval_ = std::move(fn);
  return d;
}

double DriveFunction::operator()(double t) const {
  double b = eval_(t);
  if (!(b > 1.0))
    throw Error(ErrorKind::InvalidDrive,
                "drive evaluated to " + std::to_string(b) + " at t=" + std::to_string(t));
  return b;
}

namespace {

void check_bounds(double lo, double hi) {
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw Error(ErrorKind::UnboundedRate,
                "rate bounds must satisfy 0 < lo <= hi < inf, got [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + "]");
}

}  // namespace

RateFunction RateFunction::constant(double r, double lo, double hi) {
  check_bounds(lo, hi);
  RateFunction rf;
  rf.lo_ = lo;
  rf.hi_ = hi;
  rf.eval_ = [r](double) { return r; };
  return rf;
}

RateFunction RateFunction::tabulated(std::vector<double> ts, std::vector<double> rs, double lo,
                                     double hi) {
  check_bounds(lo, hi);
  if (ts.size() != rs.size() || ts.size() < 2)
    throw Error(ErrorKind::ShapeError, "tabulated rate needs >= 2 matching samples");
  for (size_t i = 1; i < ts.size(); ++i)
    if (!(ts[i] > ts[i - 1]))
      throw Error(ErrorKind::DomainError, "tabulated rate times must be strictly increasing");
  RateFunction rf;
  rf.lo_ = lo;
  rf.hi_ = hi;
  rf.table_t_ = ts;
  rf.table_r_ = rs;
  rf.eval_ = [ts = std::move(ts), rs = std::move(rs)](double t) {
    return interp_linear(ts, rs, t);
  };
  return rf;
}

RateFunction RateFunction::from_drive(const DriveFunction& drive, double lo, double hi) {
  check_bounds(lo, hi);
  RateFunction rf;
  rf.lo_ = lo;
  rf.hi_ = hi;
  rf.eval_ = [drive](double t) { return drive_to_rate(drive(t)); };
  return rf;
}

RateFunction RateFunction::from_callable(std::function<double(double)> fn, double lo, double hi) {
  check_bounds(lo, hi);
  RateFunction rf;
  rf.lo_ = lo;
  rf.hi_ = hi;
  rf.eval_ = std::move(fn);
  return rf;
}

double RateFunction::operator()(double t) const {
  double r = eval_(t);
  if (!std::isfinite(r))
    throw Error(ErrorKind::DomainError, "rate evaluated non-finite at t=" + std::to_string(t));
  return std::min(std::max(r, lo_), hi_);
}

double RateFunction::gated(double t, double t_last) const {
  double base = (*this)(t);
  if (rho_ <= 0.0) return base;
  return refractory_gate(t, t_last, rho_) * base;
}

void RateFunction::to_csv(std::ostream& os) const {
  if (!is_tabulated())
    throw Error(ErrorKind::IoError, "only tabulated rates serialize to CSV");
  os << "t,r\n";
  char buf[64];
  for (size_t i = 0; i < table_t_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", table_t_[i], table_r_[i]);
    os << buf;
  }
}

RateFunction RateFunction::from_csv(std::istream& is, double lo, double hi) {
  std::string line;
  std::vector<double> ts, rs;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == 't' || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b))
      throw Error(ErrorKind::IoError, "malformed rate CSV line: " + line);
    ts.push_back(std::stod(a));
    rs.push_back(std::stod(b));
  }
  return tabulated(std::move(ts), std::move(rs), lo, hi);
}

double dlif_density(const RateFunction& r, double t, double tol) {
  if (t < 0.0) throw Error(ErrorKind::DomainError, "dlif_density requires t >= 0");
  if (t == 0.0) return r(0.0);
  double hazard_integral = quad_adaptive([&](double u) { return r(u); }, 0.0, t, tol);
  return r(t) * std::exp(-hazard_integral);
}

EventRealization sample_renewal(const RateFunction& r, double horizon, Rng& rng) {
  if (!(horizon > 0.0)) throw Error(ErrorKind::DomainError, "horizon must be positive");
  if (!std::isfinite(r.hi()) || !(r.hi() > 0.0))
    throw Error(ErrorKind::UnboundedRate, "thinning needs a finite positive majorant");

  EventRealization out;
  out.seed = rng.key();
  out.channels.resize(1);
  auto& events = out.channels[0];

  const double majorant = r.hi();
  double t = 0.0;
  double last = 0.0;  // renewal semantics: virtual event at 0
  while (true) {
    t += rng.exponential(majorant);
    if (t > horizon) break;
    double elapsed = t - last;
    double hazard = r(elapsed);
    if (r.has_refractory()) hazard *= refractory_gate(elapsed, 0.0, r.refractory_rho());
    if (rng.uniform() * majorant < hazard) {
      events.push_back(t);
      last = t;
    }
  }
  return out;
}

double lif_consistency(const std::function<double(double)>& r_hat,
                       const std::function<double(double)>& r_tilde, double horizon, int grid) {
  if (grid < 2) throw Error(ErrorKind::DomainError, "lif_consistency requires grid >= 2");
  const double h = horizon / static_cast<double>(grid - 1);
  double acc = 0.0;
  for (int i = 0; i < grid; ++i) {
    double t = h * static_cast<double>(i);
    double d = r_hat(t) - r_tilde(t);
    double w = (i == 0 || i == grid - 1) ? 0.5 : 1.0;
    acc += w * d * d;
  }
  return acc * h;
}

}  // namespace evlat
