#pragma once

#include <span>
#include <string>
#include <vector>

#include "evlat/errors.hpp"
#include "evlat/events.hpp"
#include "evlat/melp.hpp"
#include "evlat/rng.hpp"
#include "evlat/tape.hpp"
#include "evlat/tensor.hpp"

namespace evlat {

struct EpdeConfig {
  int K = 3;
  int feature_dim = 16;
  int hidden = 32;
  int ode_hidden = 8;
  int ode_substeps = 4;
  int decode_dim = 1;
  double alpha_ode = 0.1;
  double tau_floor = 1e-4;
  double s_floor = 0.01;
  int k_max = 256;
};

// Per-channel surrogate: an MLP mapping (previous event time, channel
// features) to K candidate mean intervals, K weight logits and K log-scale
// pre-activations, plus a small ODE head (projection, vector field, decoder).
// Positive increments are structural (softplus + floor), so predicted events
// are strictly ordered by construction.
struct EpdeParams {
  EpdeConfig cfg;

  Tensor sw1, sb1, sw2, sb2;
  Tensor proj_w, proj_b;
  Tensor field_w1, field_b1, field_w2, field_b2;
  Tensor dec_w, dec_b;

  static EpdeParams init(const EpdeConfig& cfg, Rng& rng);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  static std::vector<std::string> tensor_names();
};

enum class UnrollMode { Hard, Relaxed, Expectation };

LognormalMixture next_event_params(double prev_t, std::span<const double> features,
                                   const EpdeParams& params);

struct UnrollResult {
  EventRealization events;                 // single channel
  std::vector<LognormalMixture> mixtures;  // one per emitted step
};

/// Repeatedly emit a mixture, draw tau, advance t; stops past the window or
/// at the k_max cap (DegenerateRate when capped with a vanishing mean step).
UnrollResult unroll_events(std::span<const double> features, double window,
                           const EpdeParams& params, Rng& rng, UnrollMode mode,
                           double temperature = 0.5);

/// Algorithm: y0 = proj(features); explicit-Euler substeps of
/// y' = f(y) + alpha y over [t_s, t_e]; returns decode(y_end).
std::vector<double> evolve_ode(std::span<const double> features, double t_s, double t_e,
                               const EpdeParams& params);

// Differentiable rate proxy read from the EPDE state: 1/mixture-mean of the
// step active at each grid point, linear between grid points (so each
// step-boundary ramp spans one grid cell).
struct RateProxy {
  std::vector<double> t;
  std::vector<double> r;
  double operator()(double time) const;
};

RateProxy rate_proxy(const std::vector<LognormalMixture>& mixtures,
                     std::span<const double> grid);

// ---- tape-side counterparts ----

struct EpdeParamVars {
  Var sw1, sb1, sw2, sb2;
  Var proj_w, proj_b;
  Var field_w1, field_b1, field_w2, field_b2;
  Var dec_w, dec_b;
};

EpdeParamVars bind_epde(Tape& tape, const EpdeParams& params);

MixtureVars next_event_params_tape(Tape& tape, Var prev_t, Var features,
                                   const EpdeParamVars& vars, const EpdeConfig& cfg);

/// One Euler segment of the trajectory over an interval of tape-valued
/// length dt (split into cfg.ode_substeps).
Var evolve_segment_tape(Tape& tape, Var state, Var dt, const EpdeParamVars& vars,
                        const EpdeConfig& cfg);

Var ode_project_tape(Tape& tape, Var features, const EpdeParamVars& vars);
Var ode_decode_tape(Tape& tape, Var state, const EpdeParamVars& vars);

/// Rate proxy values at grid points, on the tape. Step boundaries come from
/// the detached cumulative means; the per-point value stays differentiable.
std::vector<Var> rate_proxy_tape(Tape& tape, const std::vector<MixtureVars>& mixtures,
                                 std::span<const double> grid);

}  // namespace evlat
