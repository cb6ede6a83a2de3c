#include "evlat/pipeline/objective.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "evlat/erg.hpp"

namespace evlat {

std::vector<Tensor> zero_like(const ModelParams& params) {
  std::vector<Tensor> out;
  for (const Tensor* t : params.tensors()) out.emplace_back(t->rows, t->cols);
  return out;
}

namespace {

Var atanh_tape(Tape& tape, Var x) {
  Var c = clamp(x, -1.0 + kAtanhClampMargin, 1.0 - kAtanhClampMargin);
  return 0.5 * (log(1.0 + c) - log(1.0 - c));
}

/// Fisher-z alignment of the group adjacency (events as pseudo-channels)
/// against the Pearson correlations of the raw observations. The training
/// unroll's realization is the single Monte-Carlo sample.
Var group_erg_term(Tape& tape, const ModelConfig& cfg,
                   const std::vector<const ToyRecord*>& records,
                   const std::vector<std::vector<Var>>& event_vars,
                   const std::vector<std::vector<double>>& event_vals) {
  const int c = static_cast<int>(records.size());
  Tensor obs(c, static_cast<int>(records[0]->obs.size()));
  for (int i = 0; i < c; ++i)
    for (int t = 0; t < obs.cols; ++t) obs.at(i, t) = records[i]->obs[t];
  Tensor z_obs = pearson_corr(obs);

  const int m = cfg.erg_grid;
  std::vector<std::vector<Var>> last(m, std::vector<Var>(c));
  Var zero = tape.constant(0.0);
  for (int g = 0; g < m; ++g) {
    double tm = cfg.window * static_cast<double>(g + 1) / static_cast<double>(m);
    for (int i = 0; i < c; ++i) {
      const auto& vals = event_vals[i];
      auto it = std::upper_bound(vals.begin(), vals.end(), tm);
      last[g][i] = it == vals.begin() ? zero : event_vars[i][(it - vals.begin()) - 1];
    }
  }

  Var reg = tape.constant(0.0);
  const double sig2 = cfg.erg_sigma * cfg.erg_sigma;
  for (int i = 0; i < c; ++i)
    for (int j = i + 1; j < c; ++j) {
      Var a_ij = tape.constant(0.0);
      for (int g = 0; g < m; ++g)
        a_ij = a_ij + exp((-cfg.erg_alpha) * abs(last[g][i] - last[g][j]));
      a_ij = a_ij / static_cast<double>(m);
      Var z_pred = atanh_tape(tape, 2.0 * a_ij - 1.0);
      double zo = std::atanh(z_obs.at(i, j));
      reg = reg + square(zo - z_pred) / (2.0 * sig2) + 0.5 * std::log(sig2);
    }
  return reg;
}

struct GroupTask {
  std::vector<const ToyRecord*> records;
  std::vector<std::uint64_t> streams;
};

struct GroupOutput {
  double loss_sum = 0.0;
  ObjectiveBreakdown parts_sum;
  std::vector<Tensor> grads;  // empty when gradients not requested
};

GroupOutput run_group(const GroupTask& task, const ModelParams& params,
                      const ObjectiveWeights& weights, const ObjectiveOptions& options,
                      const Rng& base, bool want_grads) {
  Tape tape;
  tape.reserve(1 << 17, 1 << 18);
  BoundVars bound = bind_model(tape, params);

  GroupOutput out;
  Var group_loss = tape.constant(0.0);
  std::vector<std::vector<Var>> event_vars;
  std::vector<std::vector<double>> event_vals;
  for (size_t k = 0; k < task.records.size(); ++k) {
    const ToyRecord* rec = task.records[k];
    ForwardOptions fopt;
    fopt.mode = options.mode;
    fopt.temperature = options.temperature;
    fopt.want_loss = true;
    fopt.label = band_index(rec->band);
    Rng rec_rng = base.split(task.streams[k]);
    RecordForward fwd = forward_record(tape, bound, params, *rec, weights, fopt, rec_rng);
    group_loss = group_loss + fwd.loss;
    out.parts_sum.ce += fwd.parts.ce;
    out.parts_sum.recon += fwd.parts.recon;
    out.parts_sum.kl_t += fwd.parts.kl_t;
    out.parts_sum.kl_tau += fwd.parts.kl_tau;
    out.parts_sum.r_lif += fwd.parts.r_lif;
    event_vars.push_back(std::move(fwd.event_time_vars));
    event_vals.push_back(std::move(fwd.event_times));
  }

  if (options.multichannel_demo && task.records.size() >= 2 && weights.beta != 0.0) {
    Var erg = group_erg_term(tape, params.cfg, task.records, event_vars, event_vals);
    out.parts_sum.r_erg += value_of(erg);
    group_loss = group_loss + weights.beta * erg;
  }

  out.loss_sum = value_of(group_loss);
  if (want_grads) {
    tape.backward(group_loss);
    out.grads.reserve(bound.vars.size());
    for (Var v : bound.vars) out.grads.push_back(tape.grad_tensor(v));
  }
  return out;
}

}  // namespace

ObjectiveResult objective(const std::vector<const ToyRecord*>& batch, const ModelParams& params,
                          const ObjectiveWeights& weights, const ObjectiveOptions& options,
                          const Rng& base, std::vector<Tensor>* grads) {
  if (batch.empty()) throw Error(ErrorKind::DomainError, "objective over an empty batch");

  const int group_size = options.multichannel_demo ? std::max(2, options.demo_group) : 1;
  std::vector<GroupTask> tasks;
  for (size_t i = 0; i < batch.size(); i += group_size) {
    GroupTask task;
    for (size_t k = i; k < std::min(batch.size(), i + group_size); ++k) {
      task.records.push_back(batch[k]);
      task.streams.push_back(static_cast<std::uint64_t>(k));
    }
    tasks.push_back(std::move(task));
  }

  std::vector<GroupOutput> outputs(tasks.size());
  const bool want_grads = grads != nullptr;
  int workers = options.workers;
  if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(tasks.size())));

  if (workers == 1) {
    for (size_t i = 0; i < tasks.size(); ++i)
      outputs[i] = run_group(tasks[i], params, weights, options, base, want_grads);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (size_t i = static_cast<size_t>(w); i < tasks.size(); i += workers)
          outputs[i] = run_group(tasks[i], params, weights, options, base, want_grads);
      });
    for (auto& th : pool) th.join();
  }

  // Reduction in task order keeps results identical across worker counts.
  ObjectiveResult result;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (const GroupOutput& g : outputs) {
    result.loss += g.loss_sum;
    result.parts.ce += g.parts_sum.ce;
    result.parts.recon += g.parts_sum.recon;
    result.parts.kl_t += g.parts_sum.kl_t;
    result.parts.kl_tau += g.parts_sum.kl_tau;
    result.parts.r_lif += g.parts_sum.r_lif;
    result.parts.r_erg += g.parts_sum.r_erg;
  }
  result.loss *= inv_n;
  result.parts.ce *= inv_n;
  result.parts.recon *= inv_n;
  result.parts.kl_t *= inv_n;
  result.parts.kl_tau *= inv_n;
  result.parts.r_lif *= inv_n;
  result.parts.r_erg *= inv_n;
  result.parts.total = result.loss;

  if (want_grads) {
    for (const GroupOutput& g : outputs)
      for (size_t p = 0; p < grads->size(); ++p)
        for (int k = 0; k < (*grads)[p].size(); ++k)
          (*grads)[p].data[k] += inv_n * g.grads[p].data[k];
  }
  return result;
}

}  // namespace evlat
