#pragma once

#include <vector>

#include "evlat/errors.hpp"
#include "evlat/tensor.hpp"

namespace evlat {

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  long step = 0;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;

  static AdamState init(const std::vector<Tensor>& params, double lr, double weight_decay);
};

/// One Adam update with global gradient-norm clipping and decoupled weight
/// decay. Throws NonFiniteGradient on NaN/Inf gradients.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               double clip_norm);

/// Euclidean norm over a whole gradient set.
double global_grad_norm(const std::vector<Tensor>& grads);

}  // namespace evlat
