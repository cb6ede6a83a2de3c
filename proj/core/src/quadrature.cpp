#include "evlat/quadrature.hpp"

#include <cmath>
#include <vector>

namespace evlat {

namespace {

// 15-point Kronrod extension of 7-point Gauss (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double gauss = 0.0;
  double kronrod = 0.0;
  double err = 0.0;
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);

  auto eval = [&](double x) {
    double v = f(x);
    if (!std::isfinite(v))
      throw Error(ErrorKind::NonFiniteIntegrand,
                  "integrand returned " + std::to_string(v) + " at x=" + std::to_string(x));
    return v;
  };

  double fc = eval(mid);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  for (int j = 0; j < 7; ++j) {
    double dx = half * kXgk[j];
    double f1 = eval(mid - dx);
    double f2 = eval(mid + dx);
    resk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  Panel p;
  p.gauss = resg * half;
  p.kronrod = resk * half;
  p.err = std::fabs(p.kronrod - p.gauss);
  return p;
}

constexpr int kMaxIntervals = 1 << 16;

void integrate_rec(const std::function<double(double)>& f, double a, double b, double tol,
                   double total_len, QuadResult& acc, int depth) {
  Panel p = gk15(f, a, b);
  double local_budget = tol * (b - a) / total_len;
  if (p.err <= local_budget || (b - a) < 1e-14 * total_len || depth > 48) {
    acc.value += p.kronrod;
    acc.error_estimate += p.err;
    acc.intervals += 1;
    return;
  }
  if (acc.intervals >= kMaxIntervals)
    throw Error(ErrorKind::ToleranceNotMet,
                "subdivision limit of " + std::to_string(kMaxIntervals) + " intervals exceeded");
  double mid = 0.5 * (a + b);
  integrate_rec(f, a, mid, tol, total_len, acc, depth + 1);
  integrate_rec(f, mid, b, tol, total_len, acc, depth + 1);
}

}  // namespace

QuadResult quad_adaptive_full(const std::function<double(double)>& f, double a, double b,
                              double tol) {
  if (!(a < b)) throw Error(ErrorKind::DomainError, "quad_adaptive requires a < b");
  if (!(tol > 0.0)) throw Error(ErrorKind::DomainError, "quad_adaptive requires tol > 0");
  QuadResult acc;
  integrate_rec(f, a, b, tol, b - a, acc, 0);
  return acc;
}

double quad_adaptive(const std::function<double(double)>& f, double a, double b, double tol) {
  return quad_adaptive_full(f, a, b, tol).value;
}

}  // namespace evlat
