#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evlat/pipeline/objective.hpp"

namespace evlat {

struct TrainConfig {
  ModelConfig model;
  ObjectiveWeights weights;
  int epochs = 30;
  int batch_size = 64;
  double lr = 5e-4;
  double weight_decay = 1e-4;
  double clip_norm = 1.0;
  int plateau_patience = 15;
  double temp_init = 0.5;
  double temp_anneal = 0.95;
  double temp_floor = 0.1;
  bool multichannel_demo = false;
  int demo_group = 4;
  int workers = 1;
  std::uint64_t seed = 7;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double temperature = 0.0;
  double train_loss = 0.0;
  ObjectiveBreakdown train_parts;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool improved = false;
};

struct TrainResult {
  ModelParams best;
  int best_epoch = -1;
  double best_val_accuracy = -1.0;
  std::vector<EpochLog> log;

  std::string log_json() const;
};

// Adam with gradient-norm clipping; learning rate halves when validation
// accuracy has not improved for `plateau_patience` epochs and the
// best-validation checkpoint is kept.
TrainResult train_toy(const std::vector<ToyRecord>& train_records,
                      const std::vector<ToyRecord>& val_records, const TrainConfig& config);

}  // namespace evlat
