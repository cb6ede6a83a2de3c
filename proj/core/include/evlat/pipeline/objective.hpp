#pragma once

#include <cstdint>
#include <vector>

#include "evlat/pipeline/model.hpp"

namespace evlat {

struct ObjectiveOptions {
  UnrollMode mode = UnrollMode::Relaxed;
  double temperature = 0.5;
  // Toy records are single-channel; grouping bundles `demo_group` records as
  // pseudo-channels so the beta (ERG) term has C >= 2 to act on.
  bool multichannel_demo = false;
  int demo_group = 4;
  int workers = 1;
};

struct ObjectiveResult {
  double loss = 0.0;               // per-record mean of the weighted objective
  ObjectiveBreakdown parts;        // per-record means of the raw components
};

// Weighted objective over a batch; optionally accumulates the mean gradient
// into `grads` (same layout as params.tensors()). Per-record rng streams are
// split off `base` by batch position, so two calls with the same base are
// bit-identical regardless of worker count.
ObjectiveResult objective(const std::vector<const ToyRecord*>& batch, const ModelParams& params,
                          const ObjectiveWeights& weights, const ObjectiveOptions& options,
                          const Rng& base, std::vector<Tensor>* grads);

std::vector<Tensor> zero_like(const ModelParams& params);

}  // namespace evlat
