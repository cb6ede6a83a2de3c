#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evlat/errors.hpp"
#include "evlat/events.hpp"
#include "evlat/tensor.hpp"

namespace evlat {

/// C x C adjacency in [0,1] with zero diagonal and optional symmetrization.
struct Adjacency {
  int C = 0;
  std::vector<double> a;  // row-major
  bool symmetrized = false;
  bool diag_zeroed = true;

  struct Provenance {
    double alpha = 0.0;
    int grid_m = 0;
    int mc_s = 0;
    std::uint64_t seed = 0;
  } prov;

  double& at(int i, int j) { return a[static_cast<size_t>(i) * C + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * C + j]; }
};

/// Most recent event time <= t, or 0 when none (binary search).
double last_event_before(std::span<const double> times, double t);

/// STDP-shaped even edge map exp(-alpha |lag|) in [0,1].
double edge_score(double lag, double alpha);

/// Monte-Carlo/time-grid averaged event-lag adjacency over a uniform grid of
/// `grid_m` points in (0, window].
Adjacency build_adjacency(std::span<const EventRealization> samples, int grid_m, double window,
                          double alpha, bool symmetrize);

/// Same averaging applied to raw lag matrices (one C x C matrix per
/// sample/grid slot); shared with the stability harness.
Adjacency adjacency_from_lags(std::span<const Tensor> lags, double alpha, bool symmetrize);

enum class TrajectoryKernel { Exp, Gauss, Inv1 };

/// Channel-mean trajectory graph: Delta = |s_i - s_j| on per-channel means,
/// mapped through the chosen kernel; symmetric, zero diagonal.
Adjacency build_adjacency_from_trajectory(const Tensor& z, double gamma, TrajectoryKernel mode);

/// Pearson correlation of a C x T observation matrix, clamped to
/// +/-(1 - 1e-7) so Fisher-z stays finite.
Tensor pearson_corr(const Tensor& x);

/// Fisher-z matching: sum_{i<j} [(z_obs - z_pred)^2/(2 sigma^2) + log(sigma^2)/2]
/// with z_pred = atanh(2 A_ij - 1).
double fisher_z_reg(const Adjacency& adj, const Tensor& s_obs, double sigma);

constexpr double kAtanhClampMargin = 1e-7;

}  // namespace evlat
