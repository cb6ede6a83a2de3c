#include "evlat/pipeline/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"

#include "evlat/adam.hpp"

namespace evlat {

namespace {

struct ValMetrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

ValMetrics validate(const ModelParams& params, const std::vector<ToyRecord>& val,
                    const ObjectiveWeights& weights, int workers) {
  ValMetrics m;
  if (val.empty()) return m;
  // Deterministic expectation-mode pass: loss for the log, accuracy for the
  // plateau/selection metric.
  int correct = 0;
  double loss_sum = 0.0;
  Tape tape;
  for (const ToyRecord& rec : val) {
    tape.reset();
    BoundVars bound = bind_model(tape, params);
    ForwardOptions fopt;
    fopt.mode = UnrollMode::Expectation;
    fopt.want_loss = true;
    fopt.label = band_index(rec.band);
    Rng rng(0);  // expectation mode draws nothing
    RecordForward fwd = forward_record(tape, bound, params, rec, weights, fopt, rng);
    loss_sum += fwd.parts.total;
    int pred = static_cast<int>(std::max_element(fwd.logits.begin(), fwd.logits.end()) -
                                fwd.logits.begin());
    if (pred == fopt.label) ++correct;
  }
  (void)workers;
  m.loss = loss_sum / static_cast<double>(val.size());
  m.accuracy = static_cast<double>(correct) / static_cast<double>(val.size());
  return m;
}

}  // namespace

TrainResult train_toy(const std::vector<ToyRecord>& train_records,
                      const std::vector<ToyRecord>& val_records, const TrainConfig& config) {
  if (train_records.empty()) throw Error(ErrorKind::DomainError, "empty training set");

  Rng root(config.seed);
  Rng init_rng = root.split(0x11);
  ModelParams params = ModelParams::init(config.model, init_rng);

  auto tensors = params.tensors();
  std::vector<Tensor> param_values;
  for (Tensor* t : tensors) param_values.push_back(*t);
  AdamState adam = AdamState::init(param_values, config.lr, config.weight_decay);

  TrainResult result;
  result.best = params;

  int stale = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double temperature =
        std::max(config.temp_floor, config.temp_init * std::pow(config.temp_anneal, epoch));

    // Deterministic shuffle.
    std::vector<size_t> order(train_records.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = root.split(0x1000 + static_cast<std::uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);

    EpochLog log;
    log.epoch = epoch;
    log.lr = adam.lr;
    log.temperature = temperature;

    double epoch_loss = 0.0;
    ObjectiveBreakdown epoch_parts;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += config.batch_size) {
      std::vector<const ToyRecord*> batch;
      for (size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(&train_records[order[i]]);

      ObjectiveOptions oopt;
      oopt.mode = UnrollMode::Relaxed;
      oopt.temperature = temperature;
      oopt.multichannel_demo = config.multichannel_demo;
      oopt.demo_group = config.demo_group;
      oopt.workers = config.workers;

      Rng batch_rng = root.split(0x2000 + static_cast<std::uint64_t>(epoch) * 1000 +
                                 static_cast<std::uint64_t>(start / config.batch_size));
      std::vector<Tensor> grads = zero_like(params);
      ObjectiveResult res = objective(batch, params, config.weights, oopt, batch_rng, &grads);
      if (!(res.loss < 1e6))
        throw Error(ErrorKind::TrainingDiverged,
                    "loss " + std::to_string(res.loss) + " at epoch " + std::to_string(epoch));

      for (size_t i = 0; i < tensors.size(); ++i) param_values[i] = *tensors[i];
      adam_step(param_values, grads, adam, config.clip_norm);
      for (size_t i = 0; i < tensors.size(); ++i) *tensors[i] = param_values[i];

      epoch_loss += res.loss;
      epoch_parts.ce += res.parts.ce;
      epoch_parts.recon += res.parts.recon;
      epoch_parts.kl_t += res.parts.kl_t;
      epoch_parts.kl_tau += res.parts.kl_tau;
      epoch_parts.r_lif += res.parts.r_lif;
      epoch_parts.r_erg += res.parts.r_erg;
      ++batches;
    }
    const double inv_b = 1.0 / static_cast<double>(batches);
    log.train_loss = epoch_loss * inv_b;
    log.train_parts.ce = epoch_parts.ce * inv_b;
    log.train_parts.recon = epoch_parts.recon * inv_b;
    log.train_parts.kl_t = epoch_parts.kl_t * inv_b;
    log.train_parts.kl_tau = epoch_parts.kl_tau * inv_b;
    log.train_parts.r_lif = epoch_parts.r_lif * inv_b;
    log.train_parts.r_erg = epoch_parts.r_erg * inv_b;
    log.train_parts.total = log.train_loss;

    ValMetrics val = validate(params, val_records, config.weights, config.workers);
    log.val_loss = val.loss;
    log.val_accuracy = val.accuracy;

    if (val.accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = val.accuracy;
      result.best_epoch = epoch;
      result.best = params;
      log.improved = true;
      stale = 0;
    } else {
      ++stale;
      if (stale >= config.plateau_patience) {
        adam.lr *= 0.5;
        stale = 0;
      }
    }
    result.log.push_back(log);
  }
  if (result.best_epoch < 0) result.best = params;
  return result;
}

std::string TrainResult::log_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const EpochLog& e : log) {
    nlohmann::ordered_json row;
    row["epoch"] = e.epoch;
    row["lr"] = e.lr;
    row["temperature"] = e.temperature;
    row["train_loss"] = e.train_loss;
    row["ce"] = e.train_parts.ce;
    row["recon"] = e.train_parts.recon;
    row["kl_t"] = e.train_parts.kl_t;
    row["kl_tau"] = e.train_parts.kl_tau;
    row["r_lif"] = e.train_parts.r_lif;
    row["r_erg"] = e.train_parts.r_erg;
    row["val_loss"] = e.val_loss;
    row["val_accuracy"] = e.val_accuracy;
    row["improved"] = e.improved;
    j.push_back(row);
  }
  nlohmann::ordered_json top;
  top["best_epoch"] = best_epoch;
  top["best_val_accuracy"] = best_val_accuracy;
  top["epochs"] = j;
  return top.dump(2);
}

}  // namespace evlat
