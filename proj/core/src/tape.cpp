#include "evlat/tape.hpp"

#include <algorithm>
#include <cmath>

namespace evlat {

namespace {

double softplus_fwd(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid_fwd(double x) {
  if (x >= 0.0) {
    double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(x);
  return z / (1.0 + z);
}

constexpr double kTwoOverSqrtPi = 1.1283791670955125738961589031;

}  // namespace

double softplus(double x) { return softplus_fwd(x); }
double sigmoid(double x) { return sigmoid_fwd(x); }
double square(double x) { return x * x; }
double clamp(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

int Tape::push(Op op, int r, int c, int a, int b, double c0, double c1) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.c0 = c0;
  n.c1 = c1;
  n.rows = r;
  n.cols = c;
  n.off = static_cast<int>(vals_.size());
  vals_.resize(vals_.size() + static_cast<size_t>(r) * c, 0.0);
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

Var Tape::make(Op op, int r, int c, int a, int b, double c0, double c1) {
  return Var{this, push(op, r, c, a, b, c0, c1)};
}

std::span<double> Tape::slot(int idx) {
  const Node& n = nodes_[idx];
  return {vals_.data() + n.off, static_cast<size_t>(n.rows) * n.cols};
}

std::span<const double> Tape::slot(int idx) const {
  const Node& n = nodes_[idx];
  return {vals_.data() + n.off, static_cast<size_t>(n.rows) * n.cols};
}

std::span<double> Tape::gslot(int idx) {
  const Node& n = nodes_[idx];
  return {grads_.data() + n.off, static_cast<size_t>(n.rows) * n.cols};
}

void Tape::check_same_shape(Var a, Var b, const char* what) const {
  const Node& na = nodes_[a.idx];
  const Node& nb = nodes_[b.idx];
  if (na.rows != nb.rows || na.cols != nb.cols)
    throw Error(ErrorKind::ShapeError, std::string(what) + ": " + std::to_string(na.rows) + "x" +
                                           std::to_string(na.cols) + " vs " +
                                           std::to_string(nb.rows) + "x" +
                                           std::to_string(nb.cols));
}

Var Tape::constant(double v) {
  Var out = make(Op::Const, 1, 1);
  slot(out.idx)[0] = v;
  return out;
}

Var Tape::constant(const Tensor& t) {
  Var out = make(Op::Const, t.rows, t.cols);
  std::copy(t.data.begin(), t.data.end(), slot(out.idx).begin());
  return out;
}

Var Tape::param(const Tensor& t) {
  Var out = make(Op::Param, t.rows, t.cols);
  std::copy(t.data.begin(), t.data.end(), slot(out.idx).begin());
  return out;
}

Var Tape::add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Var out = make(Op::Add, rows(a), cols(a), a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  return out;
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Var out = make(Op::Sub, rows(a), cols(a), a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] - vb[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(a, b, "mul");
  Var out = make(Op::Mul, rows(a), cols(a), a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  return out;
}

Var Tape::div(Var a, Var b) {
  check_same_shape(a, b, "div");
  Var out = make(Op::Div, rows(a), cols(a), a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] / vb[i];
  return out;
}

Var Tape::neg(Var a) {
  Var out = make(Op::Neg, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = -va[i];
  return out;
}

Var Tape::exp_op(Var a) {
  Var out = make(Op::Exp, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) {
    if (va[i] > 700.0)
      throw Error(ErrorKind::DomainError, "exp overflow at argument " + std::to_string(va[i]));
    vo[i] = std::exp(va[i]);
  }
  return out;
}

Var Tape::log_op(Var a) {
  Var out = make(Op::Log, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) {
    if (va[i] <= 0.0)
      throw Error(ErrorKind::DomainError, "log of non-positive value " + std::to_string(va[i]));
    vo[i] = std::log(va[i]);
  }
  return out;
}

Var Tape::square_op(Var a) {
  Var out = make(Op::Square, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * va[i];
  return out;
}

Var Tape::abs_op(Var a) {
  Var out = make(Op::Abs, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = std::fabs(va[i]);
  return out;
}

Var Tape::erf_op(Var a) {
  Var out = make(Op::Erf, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = std::erf(va[i]);
  return out;
}

Var Tape::softplus_op(Var a) {
  Var out = make(Op::Softplus, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = softplus_fwd(va[i]);
  return out;
}

Var Tape::sigmoid_op(Var a) {
  Var out = make(Op::Sigmoid, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = sigmoid_fwd(va[i]);
  return out;
}

Var Tape::tanh_op(Var a) {
  Var out = make(Op::Tanh, rows(a), cols(a), a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = std::tanh(va[i]);
  return out;
}

Var Tape::clamp_op(Var a, double lo, double hi) {
  Var out = make(Op::Clamp, rows(a), cols(a), a.idx, -1, lo, hi);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = std::min(std::max(va[i], lo), hi);
  return out;
}

Var Tape::scale(Var a, double c) {
  Var out = make(Op::Scale, rows(a), cols(a), a.idx, -1, c);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = c * va[i];
  return out;
}

Var Tape::shift(Var a, double c) {
  Var out = make(Op::Shift, rows(a), cols(a), a.idx, -1, c);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + c;
  return out;
}

Var Tape::softmax_op(Var a) {
  if (cols(a) != 1) throw Error(ErrorKind::ShapeError, "softmax expects a column vector");
  Var out = make(Op::Softmax, rows(a), 1, a.idx);
  auto va = slot(a.idx);
  auto vo = slot(out.idx);
  double mx = *std::max_element(va.begin(), va.end());
  double z = 0.0;
  for (size_t i = 0; i < vo.size(); ++i) {
    vo[i] = std::exp(va[i] - mx);
    z += vo[i];
  }
  for (size_t i = 0; i < vo.size(); ++i) vo[i] /= z;
  return out;
}

Var Tape::sum_op(Var a) {
  Var out = make(Op::Sum, 1, 1, a.idx);
  auto va = slot(a.idx);
  double s = 0.0;
  for (double v : va) s += v;
  slot(out.idx)[0] = s;
  return out;
}

Var Tape::mean_op(Var a) {
  Var out = make(Op::Mean, 1, 1, a.idx);
  auto va = slot(a.idx);
  double s = 0.0;
  for (double v : va) s += v;
  slot(out.idx)[0] = s / static_cast<double>(va.size());
  return out;
}

Var Tape::dot(Var a, Var b) {
  check_same_shape(a, b, "dot");
  if (cols(a) != 1) throw Error(ErrorKind::ShapeError, "dot expects column vectors");
  Var out = make(Op::Dot, 1, 1, a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  double s = 0.0;
  for (size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  slot(out.idx)[0] = s;
  return out;
}

Var Tape::matvec(Var w, Var x) {
  const int m = rows(w), n = cols(w);
  if (rows(x) != n || cols(x) != 1)
    throw Error(ErrorKind::ShapeError, "matvec: " + std::to_string(m) + "x" + std::to_string(n) +
                                           " times " + std::to_string(rows(x)) + "x" +
                                           std::to_string(cols(x)));
  Var out = make(Op::MatVec, m, 1, w.idx, x.idx);
  auto vw = slot(w.idx), vx = slot(x.idx);
  auto vo = slot(out.idx);
  for (int i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = vw.data() + static_cast<size_t>(i) * n;
    for (int j = 0; j < n; ++j) s += row[j] * vx[j];
    vo[i] = s;
  }
  return out;
}

Var Tape::matmul(Var a, Var b) {
  const int m = rows(a), k = cols(a), n = cols(b);
  if (rows(b) != k)
    throw Error(ErrorKind::ShapeError, "matmul: inner dimensions " + std::to_string(k) + " vs " +
                                           std::to_string(rows(b)));
  Var out = make(Op::MatMul, m, n, a.idx, b.idx);
  auto va = slot(a.idx), vb = slot(b.idx);
  auto vo = slot(out.idx);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int p = 0; p < k; ++p) s += va[static_cast<size_t>(i) * k + p] * vb[static_cast<size_t>(p) * n + j];
      vo[static_cast<size_t>(i) * n + j] = s;
    }
  return out;
}

Var Tape::smul(Var s, Var v) {
  if (size(s) != 1) throw Error(ErrorKind::ShapeError, "smul: first operand must be scalar");
  Var out = make(Op::SMul, rows(v), cols(v), s.idx, v.idx);
  auto vs = slot(s.idx), vv = slot(v.idx);
  auto vo = slot(out.idx);
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = vs[0] * vv[i];
  return out;
}

Var Tape::index(Var a, int i) {
  if (i < 0 || i >= size(a)) throw Error(ErrorKind::ShapeError, "index out of range");
  Var out = make(Op::Index, 1, 1, a.idx, -1, static_cast<double>(i));
  slot(out.idx)[0] = slot(a.idx)[i];
  return out;
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorKind::ShapeError, "concat of zero parts");
  int total = 0;
  for (Var p : parts) {
    if (cols(p) != 1) throw Error(ErrorKind::ShapeError, "concat expects scalars/column vectors");
    total += size(p);
  }
  Var out = make(Op::Concat, total, 1);
  Node& n = nodes_[out.idx];
  n.extra_begin = static_cast<int>(extra_.size());
  n.extra_count = static_cast<int>(parts.size());
  for (Var p : parts) extra_.push_back(p.idx);
  auto vo = slot(out.idx);
  size_t k = 0;
  for (Var p : parts)
    for (double v : slot(p.idx)) vo[k++] = v;
  return out;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw Error(ErrorKind::ShapeError, "backward: node from another tape");
  if (size(loss) != 1) throw Error(ErrorKind::ShapeError, "backward: loss must be scalar");
  grads_.assign(vals_.size(), 0.0);
  gslot(loss.idx)[0] = 1.0;

  for (int idx = loss.idx; idx >= 0; --idx) {
    const Node& n = nodes_[idx];
    auto g = gslot(idx);
    bool any = false;
    for (double v : g)
      if (v != 0.0) {
        any = true;
        break;
      }
    if (!any) continue;

    switch (n.op) {
      case Op::Const:
      case Op::Param:
        break;
      case Op::Add: {
        auto ga = gslot(n.a), gb = gslot(n.b);
        for (size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::Sub: {
        auto ga = gslot(n.a), gb = gslot(n.b);
        for (size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::Mul: {
        auto ga = gslot(n.a), gb = gslot(n.b);
        auto va = slot(n.a), vb = slot(n.b);
        for (size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * vb[i];
          gb[i] += g[i] * va[i];
        }
        break;
      }
      case Op::Div: {
        auto ga = gslot(n.a), gb = gslot(n.b);
        auto va = slot(n.a), vb = slot(n.b);
        for (size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] / vb[i];
          gb[i] -= g[i] * va[i] / (vb[i] * vb[i]);
        }
        break;
      }
      case Op::Neg: {
        auto ga = gslot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] -= g[i];
        break;
      }
      case Op::Exp: {
        auto ga = gslot(n.a);
        auto vo = slot(idx);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vo[i];
        break;
      }
      case Op::Log: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / va[i];
        break;
      }
      case Op::Square: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * g[i] * va[i];
        break;
      }
      case Op::Abs: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * (va[i] > 0.0 ? 1.0 : (va[i] < 0.0 ? -1.0 : 0.0));
        break;
      }
      case Op::Erf: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          ga[i] += g[i] * kTwoOverSqrtPi * std::exp(-va[i] * va[i]);
        break;
      }
      case Op::Softplus: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * sigmoid_fwd(va[i]);
        break;
      }
      case Op::Sigmoid: {
        auto ga = gslot(n.a);
        auto vo = slot(idx);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vo[i] * (1.0 - vo[i]);
        break;
      }
      case Op::Tanh: {
        auto ga = gslot(n.a);
        auto vo = slot(idx);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - vo[i] * vo[i]);
        break;
      }
      case Op::Clamp: {
        auto ga = gslot(n.a);
        auto va = slot(n.a);
        for (size_t i = 0; i < g.size(); ++i)
          if (va[i] > n.c0 && va[i] < n.c1) ga[i] += g[i];
        break;
      }
      case Op::Scale: {
        auto ga = gslot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c0;
        break;
      }
      case Op::Shift: {
        auto ga = gslot(n.a);
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        break;
      }
      case Op::Softmax: {
        auto ga = gslot(n.a);
        auto vo = slot(idx);
        double gy = 0.0;
        for (size_t i = 0; i < g.size(); ++i) gy += g[i] * vo[i];
        for (size_t i = 0; i < g.size(); ++i) ga[i] += vo[i] * (g[i] - gy);
        break;
      }
      case Op::Sum: {
        auto ga = gslot(n.a);
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += g[0];
        break;
      }
      case Op::Mean: {
        auto ga = gslot(n.a);
        double w = g[0] / static_cast<double>(ga.size());
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += w;
        break;
      }
      case Op::Dot: {
        auto ga = gslot(n.a), gb = gslot(n.b);
        auto va = slot(n.a), vb = slot(n.b);
        for (size_t i = 0; i < ga.size(); ++i) {
          ga[i] += g[0] * vb[i];
          gb[i] += g[0] * va[i];
        }
        break;
      }
      case Op::MatVec: {
        const Node& nw = nodes_[n.a];
        const int m = nw.rows, len = nw.cols;
        auto gw = gslot(n.a), gx = gslot(n.b);
        auto vw = slot(n.a), vx = slot(n.b);
        for (int i = 0; i < m; ++i) {
          double gi = g[i];
          if (gi == 0.0) continue;
          double* gwrow = gw.data() + static_cast<size_t>(i) * len;
          const double* vwrow = vw.data() + static_cast<size_t>(i) * len;
          for (int j = 0; j < len; ++j) {
            gwrow[j] += gi * vx[j];
            gx[j] += gi * vwrow[j];
          }
        }
        break;
      }
      case Op::MatMul: {
        const Node& na = nodes_[n.a];
        const Node& nb = nodes_[n.b];
        const int m = na.rows, k = na.cols, c = nb.cols;
        auto ga = gslot(n.a), gb = gslot(n.b);
        auto va = slot(n.a), vb = slot(n.b);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) {
            double gij = g[static_cast<size_t>(i) * c + j];
            if (gij == 0.0) continue;
            for (int p = 0; p < k; ++p) {
              ga[static_cast<size_t>(i) * k + p] += gij * vb[static_cast<size_t>(p) * c + j];
              gb[static_cast<size_t>(p) * c + j] += gij * va[static_cast<size_t>(i) * k + p];
            }
          }
        break;
      }
      case Op::SMul: {
        auto gs = gslot(n.a), gv = gslot(n.b);
        auto vs = slot(n.a), vv = slot(n.b);
        for (size_t i = 0; i < g.size(); ++i) {
          gs[0] += g[i] * vv[i];
          gv[i] += g[i] * vs[0];
        }
        break;
      }
      case Op::Index: {
        auto ga = gslot(n.a);
        ga[static_cast<int>(n.c0)] += g[0];
        break;
      }
      case Op::Concat: {
        size_t k = 0;
        for (int p = 0; p < n.extra_count; ++p) {
          int pidx = extra_[n.extra_begin + p];
          auto gp = gslot(pidx);
          for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[k++];
        }
        break;
      }
    }
  }
}

double Tape::val(Var v) const {
  return slot(v.idx)[0];
}

std::span<const double> Tape::value_span(Var v) const {
  return slot(v.idx);
}

Tensor Tape::value_tensor(Var v) const {
  const Node& n = nodes_[v.idx];
  Tensor t(n.rows, n.cols);
  auto s = slot(v.idx);
  std::copy(s.begin(), s.end(), t.data.begin());
  return t;
}

double Tape::grad_scalar(Var v) const {
  const Node& n = nodes_[v.idx];
  return grads_[n.off];
}

std::span<const double> Tape::grad_span(Var v) const {
  const Node& n = nodes_[v.idx];
  return {grads_.data() + n.off, static_cast<size_t>(n.rows) * n.cols};
}

Tensor Tape::grad_tensor(Var v) const {
  const Node& n = nodes_[v.idx];
  Tensor t(n.rows, n.cols);
  auto s = grad_span(v);
  std::copy(s.begin(), s.end(), t.data.begin());
  return t;
}

void Tape::reset() {
  nodes_.clear();
  extra_.clear();
  vals_.clear();
  grads_.clear();
}

void Tape::reserve(std::size_t nodes, std::size_t slots) {
  nodes_.reserve(nodes);
  vals_.reserve(slots);
}

}  // namespace evlat
