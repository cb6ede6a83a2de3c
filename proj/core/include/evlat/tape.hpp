#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evlat/errors.hpp"
#include "evlat/tensor.hpp"

namespace evlat {

class Tape;

/// Lightweight handle to a tape node.
struct Var {
  Tape* tape = nullptr;
  int idx = -1;
  bool valid() const { return tape != nullptr && idx >= 0; }
};

enum class Op : std::uint8_t {
  Const,
  Param,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Exp,
  Log,
  Square,
  Abs,
  Erf,
  Softplus,
  Sigmoid,
  Tanh,
  Clamp,
  Scale,   // y = c0 * x
  Shift,   // y = x + c0
  Softmax,
  Sum,
  Mean,
  Dot,
  MatVec,
  MatMul,
  SMul,    // scalar node * tensor node
  Index,   // y = x[c0]
  Concat,
};

// Dynamic reverse-mode tape over dense values. Nodes are appended in
// topological order (parents always precede children) and values are
// computed eagerly; backward() sweeps the node list once in reverse.
class Tape {
 public:
  Tape() = default;

  // ---- leaves ----
  Var constant(double v);
  Var constant(const Tensor& t);
  Var param(const Tensor& t);

  // ---- scalar/elementwise ----
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);
  Var neg(Var a);
  Var exp_op(Var a);
  Var log_op(Var a);
  Var square_op(Var a);
  Var abs_op(Var a);
  Var erf_op(Var a);
  Var softplus_op(Var a);
  Var sigmoid_op(Var a);
  Var tanh_op(Var a);
  Var clamp_op(Var a, double lo, double hi);
  Var scale(Var a, double c);
  Var shift(Var a, double c);

  // ---- vector/matrix ----
  Var softmax_op(Var a);
  Var sum_op(Var a);
  Var mean_op(Var a);
  Var dot(Var a, Var b);
  Var matvec(Var w, Var x);
  Var matmul(Var a, Var b);
  Var smul(Var s, Var v);
  Var index(Var a, int i);
  Var concat(std::span<const Var> parts);

  // ---- execution ----
  /// Reverse sweep from a scalar loss; fills the gradient arena.
  void backward(Var loss);

  double val(Var v) const;
  std::span<const double> value_span(Var v) const;
  Tensor value_tensor(Var v) const;

  double grad_scalar(Var v) const;
  std::span<const double> grad_span(Var v) const;
  Tensor grad_tensor(Var v) const;

  int rows(Var v) const { return nodes_[v.idx].rows; }
  int cols(Var v) const { return nodes_[v.idx].cols; }
  int size(Var v) const { return nodes_[v.idx].rows * nodes_[v.idx].cols; }

  std::size_t node_count() const { return nodes_.size(); }
  void reset();
  void reserve(std::size_t nodes, std::size_t slots);

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    int extra_begin = 0;
    int extra_count = 0;
    double c0 = 0.0;
    double c1 = 0.0;
    int off = 0;
    int rows = 1;
    int cols = 1;
  };

  int push(Op op, int r, int c, int a = -1, int b = -1, double c0 = 0.0, double c1 = 0.0);
  Var make(Op op, int r, int c, int a = -1, int b = -1, double c0 = 0.0, double c1 = 0.0);
  void check_same_shape(Var a, Var b, const char* what) const;
  std::span<double> slot(int idx);
  std::span<const double> slot(int idx) const;
  std::span<double> gslot(int idx);

  std::vector<Node> nodes_;
  std::vector<int> extra_;
  std::vector<double> vals_;
  std::vector<double> grads_;
};

/// Runs the reverse sweep and leaves per-leaf gradients on the tape
/// (read them back with grad_tensor / grad_scalar).
inline void tape_grad(Var loss) {
  loss.tape->backward(loss);
}

// ---- operators ----
inline Var operator+(Var a, Var b) { return a.tape->add(a, b); }
inline Var operator-(Var a, Var b) { return a.tape->sub(a, b); }
inline Var operator*(Var a, Var b) { return a.tape->mul(a, b); }
inline Var operator/(Var a, Var b) { return a.tape->div(a, b); }
inline Var operator-(Var a) { return a.tape->neg(a); }

inline Var operator+(Var a, double c) { return a.tape->shift(a, c); }
inline Var operator+(double c, Var a) { return a.tape->shift(a, c); }
inline Var operator-(Var a, double c) { return a.tape->shift(a, -c); }
inline Var operator-(double c, Var a) { return a.tape->shift(a.tape->neg(a), c); }
inline Var operator*(Var a, double c) { return a.tape->scale(a, c); }
inline Var operator*(double c, Var a) { return a.tape->scale(a, c); }
inline Var operator/(Var a, double c) { return a.tape->scale(a, 1.0 / c); }
inline Var operator/(double c, Var a) { return a.tape->div(a.tape->constant(c), a); }

// ---- math free functions (ADL lets templated code accept double or Var) ----
inline Var exp(Var a) { return a.tape->exp_op(a); }
inline Var log(Var a) { return a.tape->log_op(a); }
inline Var square(Var a) { return a.tape->square_op(a); }
inline Var abs(Var a) { return a.tape->abs_op(a); }
inline Var erf(Var a) { return a.tape->erf_op(a); }
inline Var softplus(Var a) { return a.tape->softplus_op(a); }
inline Var sigmoid(Var a) { return a.tape->sigmoid_op(a); }
inline Var tanh(Var a) { return a.tape->tanh_op(a); }
inline Var clamp(Var a, double lo, double hi) { return a.tape->clamp_op(a, lo, hi); }
inline Var softmax(Var a) { return a.tape->softmax_op(a); }
inline Var sum(Var a) { return a.tape->sum_op(a); }
inline Var mean(Var a) { return a.tape->mean_op(a); }

inline double value_of(Var v) { return v.tape->val(v); }
inline double value_of(double v) { return v; }

// double counterparts so numeric templates can instantiate on either type
double softplus(double x);
double sigmoid(double x);
double square(double x);
double clamp(double x, double lo, double hi);

}  // namespace evlat
