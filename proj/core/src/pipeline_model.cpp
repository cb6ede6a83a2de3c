#include "evlat/pipeline/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "evlat/dlif.hpp"
#include "evlat/erg.hpp"
#include "evlat/ivp_kl.hpp"

namespace evlat {

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
  Tensor t(rows, cols);
  double scale = std::sqrt(2.0 / static_cast<double>(rows + cols));
  for (double& v : t.data) v = scale * rng.normal();
  return t;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& cfg, Rng& rng) {
  ModelParams p;
  p.cfg = cfg;
  const int f = cfg.epde.feature_dim;
  p.enc_w1 = glorot(cfg.enc_hidden, cfg.obs_dim, rng);
  p.enc_b1 = Tensor(cfg.enc_hidden, 1);
  p.enc_w2 = glorot(f, cfg.enc_hidden, rng);
  p.enc_b2 = Tensor(f, 1);
  p.epde = EpdeParams::init(cfg.epde, rng);
  p.drive_w = glorot(1, f, rng);
  p.drive_b = Tensor(1, 1);
  // Start the drive in the middle of the plausible band (about 10 Hz).
  p.drive_b.data[0] = 9.5;
  p.obs_dec_w = glorot(1, cfg.epde.ode_hidden + f, rng);
  p.obs_dec_b = Tensor(1, 1);
  p.cls_w1 = glorot(cfg.cls_hidden, f + 2, rng);
  p.cls_b1 = Tensor(cfg.cls_hidden, 1);
  p.cls_w2 = glorot(cfg.n_classes, cfg.cls_hidden, rng);
  p.cls_b2 = Tensor(cfg.n_classes, 1);
  return p;
}

std::vector<Tensor*> ModelParams::tensors() {
  std::vector<Tensor*> out = {&enc_w1, &enc_b1, &enc_w2, &enc_b2};
  for (Tensor* t : epde.tensors()) out.push_back(t);
  for (Tensor* t : {&drive_w, &drive_b, &obs_dec_w, &obs_dec_b, &cls_w1, &cls_b1, &cls_w2,
                    &cls_b2})
    out.push_back(t);
  return out;
}

std::vector<const Tensor*> ModelParams::tensors() const {
  std::vector<const Tensor*> out = {&enc_w1, &enc_b1, &enc_w2, &enc_b2};
  for (const Tensor* t : epde.tensors()) out.push_back(t);
  for (const Tensor* t : {&drive_w, &drive_b, &obs_dec_w, &obs_dec_b, &cls_w1, &cls_b1, &cls_w2,
                          &cls_b2})
    out.push_back(t);
  return out;
}

std::vector<std::string> ModelParams::tensor_names() const {
  std::vector<std::string> out = {"enc_w1", "enc_b1", "enc_w2", "enc_b2"};
  for (const std::string& n : EpdeParams::tensor_names()) out.push_back("epde." + n);
  for (const char* n : {"drive_w", "drive_b", "obs_dec_w", "obs_dec_b", "cls_w1", "cls_b1",
                        "cls_w2", "cls_b2"})
    out.push_back(n);
  return out;
}

int band_index(const std::string& band) {
  if (band == "low") return 0;
  if (band == "mid") return 1;
  if (band == "high") return 2;
  throw Error(ErrorKind::ConfigError, "unknown band label '" + band + "'");
}

double band_prior_mu(const BandSpec& band, double prior_s) {
  double midpoint_rate = 0.5 * (band.lo + band.hi);
  return mean_match_mu(1.0 / midpoint_rate, prior_s);
}

BoundVars bind_model(Tape& tape, const ModelParams& params) {
  BoundVars bound;
  for (const Tensor* t : params.tensors()) bound.vars.push_back(tape.param(*t));
  return bound;
}

namespace {

struct NamedVars {
  Var enc_w1, enc_b1, enc_w2, enc_b2;
  EpdeParamVars epde;
  Var drive_w, drive_b, obs_dec_w, obs_dec_b;
  Var cls_w1, cls_b1, cls_w2, cls_b2;
};

NamedVars name_vars(const BoundVars& bound) {
  NamedVars v;
  const auto& a = bound.vars;
  v.enc_w1 = a[0];
  v.enc_b1 = a[1];
  v.enc_w2 = a[2];
  v.enc_b2 = a[3];
  v.epde.sw1 = a[4];
  v.epde.sb1 = a[5];
  v.epde.sw2 = a[6];
  v.epde.sb2 = a[7];
  v.epde.proj_w = a[8];
  v.epde.proj_b = a[9];
  v.epde.field_w1 = a[10];
  v.epde.field_b1 = a[11];
  v.epde.field_w2 = a[12];
  v.epde.field_b2 = a[13];
  v.epde.dec_w = a[14];
  v.epde.dec_b = a[15];
  v.drive_w = a[16];
  v.drive_b = a[17];
  v.obs_dec_w = a[18];
  v.obs_dec_b = a[19];
  v.cls_w1 = a[20];
  v.cls_b1 = a[21];
  v.cls_w2 = a[22];
  v.cls_b2 = a[23];
  return v;
}

void check_finite(double v, const char* component) {
  if (!std::isfinite(v))
    throw Error(ErrorKind::NonFiniteLoss, std::string("component '") + component +
                                              "' evaluated to " + std::to_string(v));
}

}  // namespace

RecordForward forward_record(Tape& tape, const BoundVars& bound, const ModelParams& params,
                             const ToyRecord& record, const ObjectiveWeights& weights,
                             const ForwardOptions& options, Rng& rng) {
  const ModelConfig& cfg = params.cfg;
  const int n = cfg.obs_dim;
  if (static_cast<int>(record.obs.size()) != n)
    throw Error(ErrorKind::ShapeError, "record has " + std::to_string(record.obs.size()) +
                                           " observations, model expects " + std::to_string(n));
  NamedVars v = name_vars(bound);
  RecordForward out;

  // Encoder.
  Tensor y_obs(n, 1);
  y_obs.data = record.obs;
  Var y = tape.constant(y_obs);
  Var z = tanh(tape.matvec(v.enc_w2, tanh(tape.matvec(v.enc_w1, y) + v.enc_b1)) + v.enc_b2);

  // Learned input drive and implied renewal rate.
  Var drive_pre = tape.index(tape.matvec(v.drive_w, z) + v.drive_b, 0);
  Var drive = 1.0 + softplus(drive_pre);
  Var r_drive = -1.0 / log(1.0 - 1.0 / drive);
  out.drive_rate = value_of(r_drive);

  // Event unroll: mixture -> interval -> time, trajectory segment per event.
  std::vector<MixtureVars> mixtures;
  std::vector<Var> y_hat_vars;
  Var prev_t = tape.constant(0.0);
  Var state = ode_project_tape(tape, z, v.epde);
  for (int i = 0; i < n; ++i) {
    MixtureVars mix = next_event_params_tape(tape, prev_t, z, v.epde, cfg.epde);
    Var tau;
    switch (options.mode) {
      case UnrollMode::Hard:
        tau = sample_interval_tape(tape, mix, rng, SampleMode::Hard);
        break;
      case UnrollMode::Relaxed:
        tau = sample_interval_tape(tape, mix, rng, SampleMode::Relaxed, options.temperature);
        break;
      case UnrollMode::Expectation:
        tau = mixture_mean_tape(tape, mix);
        break;
    }
    Var t = prev_t + tau;
    state = evolve_segment_tape(tape, state, tau, v.epde, cfg.epde);
    std::vector<Var> dec_in = {state, z};
    Var yhat = tape.index(tape.matvec(v.obs_dec_w, tape.concat(dec_in)) + v.obs_dec_b, 0);

    mixtures.push_back(std::move(mix));
    out.event_time_vars.push_back(t);
    out.event_times.push_back(value_of(t));
    y_hat_vars.push_back(yhat);
    out.y_hat.push_back(value_of(yhat));
    prev_t = t;
  }

  // Rate proxy over the predicted span.
  const double span = std::max(out.event_times.back(), 1e-6);
  std::vector<double> grid(cfg.rate_grid);
  for (int i = 0; i < cfg.rate_grid; ++i)
    grid[i] = span * static_cast<double>(i) / static_cast<double>(cfg.rate_grid - 1);
  std::vector<Var> rate_hat = rate_proxy_tape(tape, mixtures, grid);
  Var rate_sum = tape.constant(0.0);
  for (Var r : rate_hat) rate_sum = rate_sum + r;
  Var rate_mean = rate_sum / static_cast<double>(rate_hat.size());
  out.inferred_rate = value_of(rate_mean);
  Var mean_interval = prev_t / static_cast<double>(n);
  out.mean_interval = value_of(mean_interval);

  // Classifier over fused features.
  std::vector<Var> fused_parts = {z, log(mean_interval), log(rate_mean)};
  Var fused = tape.concat(fused_parts);
  Var logits = tape.matvec(v.cls_w2, tanh(tape.matvec(v.cls_w1, fused) + v.cls_b1)) + v.cls_b2;
  for (int c = 0; c < cfg.n_classes; ++c) out.logits.push_back(value_of(tape.index(logits, c)));

  if (!options.want_loss) return out;
  if (options.label < 0 || options.label >= cfg.n_classes)
    throw Error(ErrorKind::ConfigError, "forward_record needs a class label for the loss");

  // (a) cross-entropy, stable log-sum-exp with a detached max shift.
  double mx = *std::max_element(out.logits.begin(), out.logits.end());
  Var exp_sum = tape.constant(0.0);
  for (int c = 0; c < cfg.n_classes; ++c)
    exp_sum = exp_sum + exp(tape.index(logits, c) - mx);
  Var ce = (mx + log(exp_sum)) - tape.index(logits, options.label);

  // (b) observation reconstruction from the ODE trajectory.
  Var se = tape.constant(0.0);
  for (int i = 0; i < n; ++i) se = se + square(y_hat_vars[i] - record.obs[i]);
  Var recon = se / static_cast<double>(n);

  // (c) KL_T: first-step mixture density (truncated, renormalized to
  // [0, window]) against the dLIF renewal prior at the detached drive rate.
  const MixtureVars& mix0 = mixtures.front();
  Var mass = mixture_mass_below_tape(tape, mix0, cfg.window);
  Var z_norm = clamp(mass, 1e-9, 2.0);
  Var inv_z = 1.0 / z_norm;
  const double r_prior = std::clamp(out.drive_rate, cfg.rate_lo, cfg.rate_hi);
  auto qfn = [&](double t) -> std::optional<Var> {
    if (t <= 0.0 || t > cfg.window) return std::nullopt;
    Var d = mixture_density_tape(tape, t, mix0);
    if (value_of(d) < 1e-280) return std::nullopt;
    return d * inv_z;
  };
  auto log_prior = [r_prior](double t) { return std::log(r_prior) - r_prior * t; };
  auto parts = kl_bound_parts<Var>(qfn, log_prior, cfg.window, cfg.kl_eps, cfg.kl_ode_steps,
                                   tape.constant(0.0));
  Var kl_t = parts.g_eps + abs(parts.g_2eps - parts.g_eps);

  // (d) KL_tau against the band-anchored lognormal interval prior.
  const double prior_mu = band_prior_mu(BandSpec::all()[options.label], cfg.prior_s);
  Var kl_tau = tape.constant(0.0);
  for (const MixtureVars& mix : mixtures)
    kl_tau = kl_tau + kl_mixture_to_prior_tape(tape, mix, prior_mu, cfg.prior_s);
  kl_tau = kl_tau / static_cast<double>(mixtures.size());

  // (e) rate consistency between the proxy and the gated dLIF rate.
  Var lif = tape.constant(0.0);
  const double dt = span / static_cast<double>(cfg.rate_grid - 1);
  for (int i = 0; i < cfg.rate_grid; ++i) {
    double t = grid[i];
    // No suppression before the first event; afterwards the gate recovers
    // from the most recent predicted event.
    double gate = 1.0;
    for (double ev : out.event_times) {
      if (ev <= t) gate = refractory_gate(t, ev, cfg.refractory_rho);
      else break;
    }
    Var r_tilde = gate * r_drive;
    double w = (i == 0 || i == cfg.rate_grid - 1) ? 0.5 : 1.0;
    lif = lif + (w * dt) * square(rate_hat[i] - r_tilde);
  }

  out.parts.ce = value_of(ce);
  out.parts.recon = value_of(recon);
  out.parts.kl_t = value_of(kl_t);
  out.parts.kl_tau = value_of(kl_tau);
  out.parts.r_lif = value_of(lif);
  check_finite(out.parts.ce, "cross_entropy");
  check_finite(out.parts.recon, "reconstruction");
  check_finite(out.parts.kl_t, "kl_event_prior");
  check_finite(out.parts.kl_tau, "kl_interval_prior");
  check_finite(out.parts.r_lif, "rate_consistency");

  out.loss = ce + weights.lambda_aux * recon + kl_t + kl_tau + weights.lambda_lif * lif;
  out.parts.total = value_of(out.loss);
  return out;
}

// ---- checkpoint serialization ----

std::string ModelParams::to_json() const {
  nlohmann::ordered_json j;
  nlohmann::ordered_json jc;
  jc["obs_dim"] = cfg.obs_dim;
  jc["enc_hidden"] = cfg.enc_hidden;
  jc["cls_hidden"] = cfg.cls_hidden;
  jc["n_classes"] = cfg.n_classes;
  jc["rate_lo"] = cfg.rate_lo;
  jc["rate_hi"] = cfg.rate_hi;
  jc["refractory_rho"] = cfg.refractory_rho;
  jc["window"] = cfg.window;
  jc["kl_eps"] = cfg.kl_eps;
  jc["kl_ode_steps"] = cfg.kl_ode_steps;
  jc["rate_grid"] = cfg.rate_grid;
  jc["prior_s"] = cfg.prior_s;
  jc["erg_alpha"] = cfg.erg_alpha;
  jc["erg_grid"] = cfg.erg_grid;
  jc["erg_sigma"] = cfg.erg_sigma;
  jc["epde_k"] = cfg.epde.K;
  jc["feature_dim"] = cfg.epde.feature_dim;
  jc["epde_hidden"] = cfg.epde.hidden;
  jc["ode_hidden"] = cfg.epde.ode_hidden;
  jc["ode_substeps"] = cfg.epde.ode_substeps;
  jc["alpha_ode"] = cfg.epde.alpha_ode;
  jc["tau_floor"] = cfg.epde.tau_floor;
  jc["s_floor"] = cfg.epde.s_floor;
  jc["k_max"] = cfg.epde.k_max;
  j["config"] = jc;

  nlohmann::ordered_json jt;
  auto names = tensor_names();
  auto ts = tensors();
  for (size_t i = 0; i < ts.size(); ++i) {
    nlohmann::ordered_json t;
    t["rows"] = ts[i]->rows;
    t["cols"] = ts[i]->cols;
    t["data"] = ts[i]->data;
    jt[names[i]] = t;
  }
  j["tensors"] = jt;
  return j.dump(2);
}

ModelParams ModelParams::from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  const auto& jc = j.at("config");
  ModelConfig cfg;
  cfg.obs_dim = jc.at("obs_dim").get<int>();
  cfg.enc_hidden = jc.at("enc_hidden").get<int>();
  cfg.cls_hidden = jc.at("cls_hidden").get<int>();
  cfg.n_classes = jc.at("n_classes").get<int>();
  cfg.rate_lo = jc.at("rate_lo").get<double>();
  cfg.rate_hi = jc.at("rate_hi").get<double>();
  cfg.refractory_rho = jc.at("refractory_rho").get<double>();
  cfg.window = jc.at("window").get<double>();
  cfg.kl_eps = jc.at("kl_eps").get<double>();
  cfg.kl_ode_steps = jc.at("kl_ode_steps").get<int>();
  cfg.rate_grid = jc.at("rate_grid").get<int>();
  cfg.prior_s = jc.at("prior_s").get<double>();
  cfg.erg_alpha = jc.at("erg_alpha").get<double>();
  cfg.erg_grid = jc.at("erg_grid").get<int>();
  cfg.erg_sigma = jc.at("erg_sigma").get<double>();
  cfg.epde.K = jc.at("epde_k").get<int>();
  cfg.epde.feature_dim = jc.at("feature_dim").get<int>();
  cfg.epde.hidden = jc.at("epde_hidden").get<int>();
  cfg.epde.ode_hidden = jc.at("ode_hidden").get<int>();
  cfg.epde.ode_substeps = jc.at("ode_substeps").get<int>();
  cfg.epde.alpha_ode = jc.at("alpha_ode").get<double>();
  cfg.epde.tau_floor = jc.at("tau_floor").get<double>();
  cfg.epde.s_floor = jc.at("s_floor").get<double>();
  cfg.epde.k_max = jc.at("k_max").get<int>();

  Rng dummy(0);
  ModelParams p = ModelParams::init(cfg, dummy);
  auto names = p.tensor_names();
  auto ts = p.tensors();
  const auto& jt = j.at("tensors");
  for (size_t i = 0; i < ts.size(); ++i) {
    const auto& t = jt.at(names[i]);
    int rows = t.at("rows").get<int>();
    int cols = t.at("cols").get<int>();
    if (rows != ts[i]->rows || cols != ts[i]->cols)
      throw Error(ErrorKind::ShapeError, "checkpoint tensor '" + names[i] + "' has shape " +
                                             std::to_string(rows) + "x" + std::to_string(cols));
    ts[i]->data = t.at("data").get<std::vector<double>>();
  }
  return p;
}

}  // namespace evlat
