#include "evlat/adam.hpp"

#include <cmath>

namespace evlat {

AdamState AdamState::init(const std::vector<Tensor>& params, double lr, double weight_decay) {
  AdamState s;
  s.lr = lr;
  s.weight_decay = weight_decay;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const Tensor& p : params) {
    s.m.emplace_back(p.rows, p.cols);
    s.v.emplace_back(p.rows, p.cols);
  }
  return s;
}

double global_grad_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const Tensor& g : grads)
    for (double x : g.data) sq += x * x;
  return std::sqrt(sq);
}

void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state,
               double clip_norm) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error(ErrorKind::ShapeError, "adam_step: parameter/gradient/state count mismatch");
  if (!(clip_norm > 0.0)) throw Error(ErrorKind::DomainError, "adam_step: clip_norm must be > 0");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m[i]))
      throw Error(ErrorKind::ShapeError, "adam_step: shape mismatch at parameter " + std::to_string(i));
    for (double x : grads[i].data)
      if (!std::isfinite(x))
        throw Error(ErrorKind::NonFiniteGradient,
                    "non-finite gradient in parameter " + std::to_string(i));
  }

  double norm = global_grad_norm(grads);
  double rescale = norm > clip_norm ? clip_norm / norm : 1.0;

  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& g = grads[i];
    for (int k = 0; k < p.size(); ++k) {
      double gk = g.data[k] * rescale;
      m.data[k] = state.beta1 * m.data[k] + (1.0 - state.beta1) * gk;
      v.data[k] = state.beta2 * v.data[k] + (1.0 - state.beta2) * gk * gk;
      double mhat = m.data[k] / bc1;
      double vhat = v.data[k] / bc2;
      p.data[k] -= state.lr * state.weight_decay * p.data[k];
      p.data[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace evlat
