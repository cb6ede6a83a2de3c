#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "evlat/tape.hpp"
#include "evlat/tensor.hpp"

namespace evlat::testutil {

// Builds a loss from parameter leaves; used for both the AD pass and the
// finite-difference re-evaluations.
using GraphBuilder = std::function<Var(Tape&, std::vector<Var>&)>;

struct GradCheck {
  double max_abs_diff = 0.0;
  double max_rel_err = 0.0;  // |ad - fd| / max(1, |fd|)
};

inline GradCheck check_gradients(const GraphBuilder& build, const std::vector<Tensor>& init,
                                 double h = 1e-5) {
  Tape tape;
  std::vector<Var> vars;
  for (const Tensor& t : init) vars.push_back(tape.param(t));
  Var loss = build(tape, vars);
  tape.backward(loss);
  std::vector<Tensor> ad;
  for (Var v : vars) ad.push_back(tape.grad_tensor(v));

  auto eval = [&](const std::vector<Tensor>& params) {
    Tape fresh;
    std::vector<Var> vs;
    for (const Tensor& t : params) vs.push_back(fresh.param(t));
    return value_of(build(fresh, vs));
  };

  GradCheck out;
  std::vector<Tensor> work = init;
  for (size_t p = 0; p < init.size(); ++p)
    for (int k = 0; k < init[p].size(); ++k) {
      double orig = work[p].data[k];
      work[p].data[k] = orig + h;
      double up = eval(work);
      work[p].data[k] = orig - h;
      double dn = eval(work);
      work[p].data[k] = orig;
      double fd = (up - dn) / (2.0 * h);
      double diff = std::fabs(ad[p].data[k] - fd);
      out.max_abs_diff = std::max(out.max_abs_diff, diff);
      out.max_rel_err = std::max(out.max_rel_err, diff / std::max(1.0, std::fabs(fd)));
    }
  return out;
}

/// Kolmogorov-Smirnov statistic of samples against a CDF.
inline double ks_statistic(std::vector<double> samples,
                           const std::function<double(double)>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

/// Asymptotic KS critical value at significance 0.01.
inline double ks_critical_01(size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

}  // namespace evlat::testutil
