#include "evlat/epde.hpp"

#include <algorithm>
#include <cmath>

namespace evlat {

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double scale = std::sqrt(2.0 / static_cast<double>(rows + cols));
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

void mlp_forward(const Tensor& w, const Tensor& b, std::span<const double> x,
                 std::vector<double>& out) {
  out.assign(w.rows, 0.0);
  for (int i = 0; i < w.rows; ++i) {
    double s = b.data[i];
    for (int j = 0; j < w.cols; ++j) s += w.at(i, j) * x[j];
    out[i] = s;
  }
}

double softplus_floor(double x, double floor) { return softplus(x) + floor; }

}  // namespace

EpdeParams EpdeParams::init(const EpdeConfig& cfg, Rng& rng) {
  EpdeParams p;
  p.cfg = cfg;
  const int in = 1 + cfg.feature_dim;
  p.sw1 = glorot(cfg.hidden, in, rng);
  p.sb1 = Tensor(cfg.hidden, 1);
  p.sw2 = glorot(3 * cfg.K, cfg.hidden, rng);
  p.sb2 = Tensor(3 * cfg.K, 1);
  p.proj_w = glorot(cfg.ode_hidden, cfg.feature_dim, rng);
  p.proj_b = Tensor(cfg.ode_hidden, 1);
  p.field_w1 = glorot(cfg.ode_hidden, cfg.ode_hidden, rng);
  p.field_b1 = Tensor(cfg.ode_hidden, 1);
  p.field_w2 = glorot(cfg.ode_hidden, cfg.ode_hidden, rng);
  p.field_b2 = Tensor(cfg.ode_hidden, 1);
  p.dec_w = glorot(cfg.decode_dim, cfg.ode_hidden, rng);
  p.dec_b = Tensor(cfg.decode_dim, 1);
  return p;
}

std::vector<Tensor*> EpdeParams::tensors() {
  return {&sw1, &sb1, &sw2, &sb2, &proj_w, &proj_b, &field_w1, &field_b1, &field_w2, &field_b2,
          &dec_w, &dec_b};
}

std::vector<const Tensor*> EpdeParams::tensors() const {
  return {&sw1, &sb1, &sw2, &sb2, &proj_w, &proj_b, &field_w1, &field_b1, &field_w2, &field_b2,
          &dec_w, &dec_b};
}

std::vector<std::string> EpdeParams::tensor_names() {
  return {"sw1", "sb1", "sw2", "sb2", "proj_w", "proj_b", "field_w1", "field_b1", "field_w2",
          "field_b2", "dec_w", "dec_b"};
}

LognormalMixture next_event_params(double prev_t, std::span<const double> features,
                                   const EpdeParams& params) {
  const EpdeConfig& cfg = params.cfg;
  if (prev_t < 0.0) throw Error(ErrorKind::DomainError, "previous event time must be >= 0");
  if (static_cast<int>(features.size()) != cfg.feature_dim)
    throw Error(ErrorKind::ShapeError, "feature dimension " + std::to_string(features.size()) +
                                           " != " + std::to_string(cfg.feature_dim));
  std::vector<double> input(1 + cfg.feature_dim);
  input[0] = prev_t;
  std::copy(features.begin(), features.end(), input.begin() + 1);

  std::vector<double> h, o;
  mlp_forward(params.sw1, params.sb1, input, h);
  for (double& v : h) v = std::tanh(v);
  mlp_forward(params.sw2, params.sb2, h, o);

  const int k = cfg.K;
  std::vector<double> w(k), tau(k), s(k);
  double mx = *std::max_element(o.begin(), o.begin() + k);
  double z = 0.0;
  for (int j = 0; j < k; ++j) {
    w[j] = std::exp(o[j] - mx);
    z += w[j];
  }
  for (int j = 0; j < k; ++j) w[j] /= z;
  for (int j = 0; j < k; ++j) tau[j] = softplus_floor(o[k + j], cfg.tau_floor);
  for (int j = 0; j < k; ++j) s[j] = softplus_floor(o[2 * k + j], cfg.s_floor);
  return make_lognormal_mixture(std::move(w), std::move(tau), std::move(s));
}

UnrollResult unroll_events(std::span<const double> features, double window,
                           const EpdeParams& params, Rng& rng, UnrollMode mode,
                           double temperature) {
  if (!(window > 0.0)) throw Error(ErrorKind::DomainError, "window must be positive");
  UnrollResult out;
  out.events.seed = rng.key();
  out.events.channels.resize(1);
  auto& events = out.events.channels[0];

  double t = 0.0;
  for (int k = 0; k < params.cfg.k_max; ++k) {
    LognormalMixture mix = next_event_params(t, features, params);
    double tau;
    switch (mode) {
      case UnrollMode::Hard: tau = sample_interval(mix, rng, SampleMode::Hard); break;
      case UnrollMode::Relaxed:
        tau = sample_interval(mix, rng, SampleMode::Relaxed, temperature);
        break;
      case UnrollMode::Expectation: tau = mixture_mean(mix); break;
    }
    double next = t + tau;
    if (next > window) return out;
    out.mixtures.push_back(std::move(mix));
    events.push_back(next);
    t = next;
  }
  if (!out.mixtures.empty() && mixture_mean(out.mixtures.back()) < 1e-4)
    throw Error(ErrorKind::DegenerateRate,
                "event cap reached with mean interval below 1e-4 s");
  return out;
}

namespace {

void field_eval(const EpdeParams& params, const std::vector<double>& y,
                std::vector<double>& out, std::vector<double>& scratch) {
  mlp_forward(params.field_w1, params.field_b1, y, scratch);
  for (double& v : scratch) v = std::tanh(v);
  mlp_forward(params.field_w2, params.field_b2, scratch, out);
}

}  // namespace

std::vector<double> evolve_ode(std::span<const double> features, double t_s, double t_e,
                               const EpdeParams& params) {
  if (!(t_e > t_s)) throw Error(ErrorKind::DomainError, "evolve_ode requires t_e > t_s");
  if (params.cfg.ode_substeps < 1)
    throw Error(ErrorKind::DomainError, "evolve_ode requires ode_substeps >= 1");

  std::vector<double> y, f, scratch;
  mlp_forward(params.proj_w, params.proj_b, features, y);
  const double dt = (t_e - t_s) / static_cast<double>(params.cfg.ode_substeps);
  for (int m = 0; m < params.cfg.ode_substeps; ++m) {
    field_eval(params, y, f, scratch);
    for (size_t i = 0; i < y.size(); ++i) {
      y[i] += dt * (f[i] + params.cfg.alpha_ode * y[i]);
      if (!std::isfinite(y[i]))
        throw Error(ErrorKind::NonFiniteState, "trajectory state diverged at substep " +
                                                   std::to_string(m));
    }
  }
  std::vector<double> out;
  mlp_forward(params.dec_w, params.dec_b, y, out);
  return out;
}

double RateProxy::operator()(double time) const {
  if (t.empty()) throw Error(ErrorKind::DomainError, "empty rate proxy");
  if (time <= t.front()) return r.front();
  if (time >= t.back()) return r.back();
  auto it = std::upper_bound(t.begin(), t.end(), time);
  size_t i = static_cast<size_t>(it - t.begin());
  double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
  return r[i - 1] + w * (r[i] - r[i - 1]);
}

namespace {

// Step index whose [cumulative-mean) interval contains the grid point.
size_t active_step(const std::vector<double>& boundaries, double time) {
  auto it = std::upper_bound(boundaries.begin(), boundaries.end(), time);
  size_t i = static_cast<size_t>(it - boundaries.begin());
  return std::min(i, boundaries.size() - 1);
}

}  // namespace

RateProxy rate_proxy(const std::vector<LognormalMixture>& mixtures,
                     std::span<const double> grid) {
  if (mixtures.empty()) throw Error(ErrorKind::DomainError, "rate proxy needs >= 1 step");
  std::vector<double> boundaries;  // end time of each step, expectation semantics
  double acc = 0.0;
  for (const auto& mix : mixtures) {
    acc += mixture_mean(mix);
    boundaries.push_back(acc);
  }
  RateProxy proxy;
  proxy.t.assign(grid.begin(), grid.end());
  proxy.r.reserve(grid.size());
  for (double g : grid) {
    size_t i = active_step(boundaries, g);
    proxy.r.push_back(1.0 / mixture_mean(mixtures[i]));
  }
  return proxy;
}

// ---- tape-side ----

EpdeParamVars bind_epde(Tape& tape, const EpdeParams& p) {
  EpdeParamVars v;
  v.sw1 = tape.param(p.sw1);
  v.sb1 = tape.param(p.sb1);
  v.sw2 = tape.param(p.sw2);
  v.sb2 = tape.param(p.sb2);
  v.proj_w = tape.param(p.proj_w);
  v.proj_b = tape.param(p.proj_b);
  v.field_w1 = tape.param(p.field_w1);
  v.field_b1 = tape.param(p.field_b1);
  v.field_w2 = tape.param(p.field_w2);
  v.field_b2 = tape.param(p.field_b2);
  v.dec_w = tape.param(p.dec_w);
  v.dec_b = tape.param(p.dec_b);
  return v;
}

MixtureVars next_event_params_tape(Tape& tape, Var prev_t, Var features,
                                   const EpdeParamVars& vars, const EpdeConfig& cfg) {
  std::vector<Var> parts = {prev_t, features};
  Var input = tape.concat(parts);
  Var h = tanh(tape.matvec(vars.sw1, input) + vars.sb1);
  Var o = tape.matvec(vars.sw2, h) + vars.sb2;

  std::vector<Var> logits;
  for (int j = 0; j < cfg.K; ++j) logits.push_back(tape.index(o, j));
  Var w = softmax(tape.concat(logits));

  MixtureVars mix;
  for (int j = 0; j < cfg.K; ++j) {
    mix.weights.push_back(tape.index(w, j));
    mix.tau.push_back(softplus(tape.index(o, cfg.K + j)) + cfg.tau_floor);
    mix.s.push_back(softplus(tape.index(o, 2 * cfg.K + j)) + cfg.s_floor);
  }
  mean_match_tape(mix);
  return mix;
}

Var ode_project_tape(Tape& tape, Var features, const EpdeParamVars& vars) {
  return tape.matvec(vars.proj_w, features) + vars.proj_b;
}

Var ode_decode_tape(Tape& tape, Var state, const EpdeParamVars& vars) {
  return tape.matvec(vars.dec_w, state) + vars.dec_b;
}

Var evolve_segment_tape(Tape& tape, Var state, Var dt, const EpdeParamVars& vars,
                        const EpdeConfig& cfg) {
  Var sub_dt = dt / static_cast<double>(cfg.ode_substeps);
  Var y = state;
  for (int m = 0; m < cfg.ode_substeps; ++m) {
    Var f = tape.matvec(vars.field_w2, tanh(tape.matvec(vars.field_w1, y) + vars.field_b1)) +
            vars.field_b2;
    Var rhs = f + cfg.alpha_ode * y;
    y = y + tape.smul(sub_dt, rhs);
  }
  for (double v : tape.value_span(y))
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteState, "trajectory state diverged");
  return y;
}

std::vector<Var> rate_proxy_tape(Tape& tape, const std::vector<MixtureVars>& mixtures,
                                 std::span<const double> grid) {
  if (mixtures.empty()) throw Error(ErrorKind::DomainError, "rate proxy needs >= 1 step");
  std::vector<Var> means;
  std::vector<double> boundaries;
  double acc = 0.0;
  for (const auto& mix : mixtures) {
    Var m = mixture_mean_tape(tape, mix);
    means.push_back(m);
    acc += value_of(m);
    boundaries.push_back(acc);
  }
  std::vector<Var> out;
  out.reserve(grid.size());
  for (double g : grid) {
    size_t i = active_step(boundaries, g);
    out.push_back(1.0 / means[i]);
  }
  return out;
}

}  // namespace evlat
