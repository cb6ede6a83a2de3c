#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evlat/epde.hpp"
#include "evlat/melp.hpp"
#include "evlat/rng.hpp"
#include "evlat/tape.hpp"
#include "evlat/tensor.hpp"
#include "evlat/toygen.hpp"

namespace evlat {

struct ModelConfig {
  EpdeConfig epde;            // surrogate + ODE head dimensions
  int obs_dim = 20;
  int enc_hidden = 32;
  int cls_hidden = 16;
  int n_classes = 3;
  double rate_lo = 0.5;       // plausible-rate band for the renewal prior (Hz)
  double rate_hi = 40.0;
  double refractory_rho = 0.02;
  double window = 6.0;        // KL horizon S (seconds)
  double kl_eps = 1e-3;
  int kl_ode_steps = 1024;
  int rate_grid = 33;
  double prior_s = 0.5;       // interval-prior log-scale; mean comes from the band midpoint
  double erg_alpha = 2.0;
  int erg_grid = 16;
  double erg_sigma = 1.0;

  ModelConfig() {
    epde.feature_dim = 16;
    epde.hidden = 32;
    epde.ode_hidden = 8;
    epde.ode_substeps = 4;
    epde.decode_dim = 1;
  }
};

/// All trainable tensors of the toy model. The observation decoder sees the
/// evolved trajectory state concatenated with the encoder features.
struct ModelParams {
  ModelConfig cfg;

  Tensor enc_w1, enc_b1, enc_w2, enc_b2;
  EpdeParams epde;
  Tensor drive_w, drive_b;
  Tensor obs_dec_w, obs_dec_b;
  Tensor cls_w1, cls_b1, cls_w2, cls_b2;

  static ModelParams init(const ModelConfig& cfg, Rng& rng);

  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  std::vector<std::string> tensor_names() const;

  std::string to_json() const;
  static ModelParams from_json(const std::string& text);
};

struct ObjectiveWeights {
  double beta = 0.0;        // ERG regularizer (needs >= 2 channels)
  double lambda_lif = 0.05;
  double lambda_aux = 1.0;  // observation reconstruction
  // KL_T and KL_tau always enter with weight 1.
};

struct ObjectiveBreakdown {
  double ce = 0.0;
  double recon = 0.0;
  double kl_t = 0.0;
  double kl_tau = 0.0;
  double r_lif = 0.0;
  double r_erg = 0.0;
  double total = 0.0;

  double weighted_sum(const ObjectiveWeights& w) const {
    return ce + w.lambda_aux * recon + kl_t + kl_tau + w.lambda_lif * r_lif + w.beta * r_erg;
  }
};

struct ForwardOptions {
  UnrollMode mode = UnrollMode::Relaxed;
  double temperature = 0.5;
  bool want_loss = true;  // objective terms are skipped for metric-only passes
  int label = -1;         // band index; required when want_loss
};

struct RecordForward {
  Var loss;  // CE + lambda_aux recon + KL_T + KL_tau + lambda_LIF R_LIF (no ERG term)
  ObjectiveBreakdown parts;

  std::vector<double> event_times;
  std::vector<Var> event_time_vars;
  std::vector<double> y_hat;
  std::vector<double> logits;
  double inferred_rate = 0.0;
  double mean_interval = 0.0;
  double drive_rate = 0.0;
};

struct BoundVars {
  std::vector<Var> vars;  // tape handles in ModelParams tensor order
};

BoundVars bind_model(Tape& tape, const ModelParams& params);

/// Full single-record forward pass on the tape.
RecordForward forward_record(Tape& tape, const BoundVars& bound, const ModelParams& params,
                             const ToyRecord& record, const ObjectiveWeights& weights,
                             const ForwardOptions& options, Rng& rng);

int band_index(const std::string& band);

/// Lognormal interval-prior log-mean for a band: mean interval is the
/// reciprocal band-midpoint rate.
double band_prior_mu(const BandSpec& band, double prior_s);

}  // namespace evlat
