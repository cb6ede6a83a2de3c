#include "evlat/erg.hpp"

#include <algorithm>
#include <cmath>

namespace evlat {

double last_event_before(std::span<const double> times, double t) {
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return *(it - 1);
}

double edge_score(double lag, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::DomainError, "edge_score requires alpha > 0");
  return std::exp(-alpha * std::fabs(lag));
}

namespace {

void finalize(Adjacency& adj, bool symmetrize) {
  const int c = adj.C;
  for (int i = 0; i < c; ++i) adj.at(i, i) = 0.0;
  adj.diag_zeroed = true;
  if (symmetrize) {
    for (int i = 0; i < c; ++i)
      for (int j = i + 1; j < c; ++j) {
        double v = 0.5 * (adj.at(i, j) + adj.at(j, i));
        adj.at(i, j) = v;
        adj.at(j, i) = v;
      }
    adj.symmetrized = true;
  }
}

}  // namespace

Adjacency build_adjacency(std::span<const EventRealization> samples, int grid_m, double window,
                          double alpha, bool symmetrize) {
  if (samples.empty()) throw Error(ErrorKind::DomainError, "need at least one realization");
  if (grid_m < 1) throw Error(ErrorKind::DomainError, "need at least one grid point");
  const int c = samples[0].channel_count();
  for (const auto& s : samples)
    if (s.channel_count() != c)
      throw Error(ErrorKind::ShapeError, "realizations disagree on channel count");

  Adjacency adj;
  adj.C = c;
  adj.a.assign(static_cast<size_t>(c) * c, 0.0);
  adj.prov.alpha = alpha;
  adj.prov.grid_m = grid_m;
  adj.prov.mc_s = static_cast<int>(samples.size());
  adj.prov.seed = samples[0].seed;

  const double norm = 1.0 / (static_cast<double>(grid_m) * samples.size());
  std::vector<double> last(c);
  for (const auto& sample : samples) {
    for (int m = 1; m <= grid_m; ++m) {
      double tm = window * static_cast<double>(m) / static_cast<double>(grid_m);
      for (int i = 0; i < c; ++i) last[i] = last_event_before(sample.channels[i], tm);
      for (int i = 0; i < c; ++i)
        for (int j = 0; j < c; ++j)
          adj.at(i, j) += norm * edge_score(last[i] - last[j], alpha);
    }
  }
  finalize(adj, symmetrize);
  return adj;
}

Adjacency adjacency_from_lags(std::span<const Tensor> lags, double alpha, bool symmetrize) {
  if (lags.empty()) throw Error(ErrorKind::DomainError, "need at least one lag matrix");
  const int c = lags[0].rows;
  Adjacency adj;
  adj.C = c;
  adj.a.assign(static_cast<size_t>(c) * c, 0.0);
  adj.prov.alpha = alpha;
  adj.prov.mc_s = static_cast<int>(lags.size());

  const double norm = 1.0 / static_cast<double>(lags.size());
  for (const Tensor& lag : lags) {
    if (lag.rows != c || lag.cols != c)
      throw Error(ErrorKind::ShapeError, "lag matrices disagree on shape");
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < c; ++j) adj.at(i, j) += norm * edge_score(lag.at(i, j), alpha);
  }
  finalize(adj, symmetrize);
  return adj;
}

Adjacency build_adjacency_from_trajectory(const Tensor& z, double gamma, TrajectoryKernel mode) {
  if (!(gamma > 0.0)) throw Error(ErrorKind::DomainError, "gamma must be positive");
  if (z.rows < 1 || z.cols < 1) throw Error(ErrorKind::ShapeError, "empty trajectory matrix");
  const int c = z.rows;
  std::vector<double> means(c, 0.0);
  for (int i = 0; i < c; ++i) {
    for (int t = 0; t < z.cols; ++t) means[i] += z.at(i, t);
    means[i] /= static_cast<double>(z.cols);
  }
  Adjacency adj;
  adj.C = c;
  adj.a.assign(static_cast<size_t>(c) * c, 0.0);
  adj.prov.alpha = gamma;
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) {
      if (i == j) continue;
      double d = std::fabs(means[i] - means[j]);
      double w = 0.0;
      switch (mode) {
        case TrajectoryKernel::Exp: w = std::exp(-gamma * d); break;
        case TrajectoryKernel::Gauss: w = std::exp(-gamma * d * d); break;
        case TrajectoryKernel::Inv1: w = 1.0 / (1.0 + gamma * d); break;
      }
      adj.at(i, j) = w;
    }
  finalize(adj, true);
  return adj;
}

Tensor pearson_corr(const Tensor& x) {
  const int c = x.rows, n = x.cols;
  if (n < 2) throw Error(ErrorKind::ShapeError, "pearson_corr needs >= 2 samples per channel");
  std::vector<double> mean(c, 0.0), sd(c, 0.0);
  for (int i = 0; i < c; ++i) {
    for (int t = 0; t < n; ++t) mean[i] += x.at(i, t);
    mean[i] /= n;
    for (int t = 0; t < n; ++t) {
      double d = x.at(i, t) - mean[i];
      sd[i] += d * d;
    }
    if (sd[i] <= 0.0)
      throw Error(ErrorKind::DegenerateChannel, "zero-variance channel " + std::to_string(i));
    sd[i] = std::sqrt(sd[i]);
  }
  Tensor corr(c, c);
  const double cap = 1.0 - kAtanhClampMargin;
  for (int i = 0; i < c; ++i) {
    corr.at(i, i) = cap;
    for (int j = i + 1; j < c; ++j) {
      double s = 0.0;
      for (int t = 0; t < n; ++t) s += (x.at(i, t) - mean[i]) * (x.at(j, t) - mean[j]);
      double r = s / (sd[i] * sd[j]);
      r = std::min(std::max(r, -cap), cap);
      corr.at(i, j) = r;
      corr.at(j, i) = r;
    }
  }
  return corr;
}

double fisher_z_reg(const Adjacency& adj, const Tensor& s_obs, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorKind::DomainError, "sigma must be positive");
  if (s_obs.rows != adj.C || s_obs.cols != adj.C)
    throw Error(ErrorKind::ShapeError, "correlation matrix does not match adjacency");
  const double cap = 1.0 - kAtanhClampMargin;
  double acc = 0.0;
  for (int i = 0; i < adj.C; ++i)
    for (int j = i + 1; j < adj.C; ++j) {
      double z_obs = std::atanh(std::min(std::max(s_obs.at(i, j), -cap), cap));
      double pred = std::min(std::max(2.0 * adj.at(i, j) - 1.0, -cap), cap);
      double z_pred = std::atanh(pred);
      double d = z_obs - z_pred;
      acc += d * d / (2.0 * sigma * sigma) + std::log(sigma * sigma) / 2.0;
    }
  return acc;
}

}  // namespace evlat
