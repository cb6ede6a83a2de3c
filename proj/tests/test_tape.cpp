#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evlat/errors.hpp"
#include "evlat/rng.hpp"
#include "evlat/tape.hpp"
#include "support/testutil.hpp"

using namespace evlat;
using evlat::testutil::check_gradients;

namespace {

Tensor random_tensor(int rows, int cols, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(rows, cols);
  for (double& v : t.data) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("tape: power rule on x^2") {
  Tape tape;
  Var x = tape.param(Tensor::scalar(3.0));
  Var loss = square(x);
  tape_grad(loss);
  CHECK(tape.grad_scalar(x) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("tape: softplus gradient at zero is one half") {
  Tape tape;
  Var x = tape.param(Tensor::scalar(0.0));
  Var loss = softplus(x);
  tape_grad(loss);
  CHECK(tape.grad_scalar(x) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("tape: shared subexpressions accumulate correctly") {
  Tape tape;
  Var x = tape.param(Tensor::scalar(1.5));
  Var y = x * x + x * x;  // d/dx = 4x
  tape_grad(y);
  CHECK(tape.grad_scalar(x) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("tape: every scalar primitive matches finite differences over 100 seeds") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    std::vector<Tensor> init = {random_tensor(1, 1, rng, 0.3, 1.8),
                                random_tensor(1, 1, rng, 0.3, 1.8)};
    auto build = [](Tape& t, std::vector<Var>& v) {
      Var a = v[0], b = v[1];
      Var u = a + b;
      u = u * b - a / b;
      u = u + exp(a * 0.3) + log(b + 2.0);
      u = u + square(a) + softplus(b) + sigmoid(a - b) + tanh(b * 0.7);
      u = u + erf(a * 0.5) + abs(a - 1.1) + clamp(b, 0.1, 1.5);
      u = u + (-a) + (2.0 - b) + a * 1.7 + b / 3.0 + (1.0 / (a + 3.0));
      return u;
    };
    auto res = check_gradients(build, init);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("tape: vector and matrix primitives match finite differences over 100 seeds") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    std::vector<Tensor> init = {random_tensor(3, 2, rng), random_tensor(2, 1, rng),
                                random_tensor(3, 1, rng), random_tensor(2, 3, rng)};
    auto build = [](Tape& t, std::vector<Var>& v) {
      Var w = v[0], x = v[1], bias = v[2], m = v[3];
      Var h = t.matvec(w, x) + bias;           // matvec, add
      Var sm = softmax(h);                     // softmax
      Var mm = t.matmul(m, w);                 // (2x3)(3x2) -> 2x2
      Var s = sum(mm) + mean(h) + t.dot(sm, bias);
      Var scaled = t.smul(t.index(h, 1), sm);  // scalar node * vector
      std::vector<Var> parts = {scaled, x};
      Var cat = t.concat(parts);
      return s + sum(cat);
    };
    auto res = check_gradients(build, init);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("tape: random two-layer MLP with 16 params beats 1e-4 vs central differences") {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    std::vector<Tensor> init = {random_tensor(3, 3, rng, -1.0, 1.0),
                                random_tensor(3, 1, rng, -1.0, 1.0),
                                random_tensor(1, 3, rng, -1.0, 1.0),
                                random_tensor(1, 1, rng, -1.0, 1.0)};
    Tensor input = random_tensor(3, 1, rng, -1.0, 1.0);
    auto build = [input](Tape& t, std::vector<Var>& v) {
      Var x = t.constant(input);
      Var h = tanh(t.matvec(v[0], x) + v[1]);
      Var o = t.matvec(v[2], h) + v[3];
      return square(t.index(o, 0));
    };
    auto res = check_gradients(build, init);
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("tape: log and exp domain violations raise DomainError") {
  Tape tape;
  Var x = tape.param(Tensor::scalar(-1.0));
  CHECK_THROWS_AS((void)log(x), Error);
  Var big = tape.param(Tensor::scalar(800.0));
  CHECK_THROWS_AS((void)exp(big), Error);
}

TEST_CASE("tape: backward requires a scalar loss") {
  Tape tape;
  Var v = tape.param(Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(tape.backward(v), Error);
}

TEST_CASE("tape: shape mismatches are rejected") {
  Tape tape;
  Var a = tape.param(Tensor::vector({1.0, 2.0}));
  Var b = tape.param(Tensor::vector({1.0, 2.0, 3.0}));
  CHECK_THROWS_AS((void)(a + b), Error);
  Rng rng(1);
  Var w = tape.param(random_tensor(2, 2, rng));
  CHECK_THROWS_AS((void)tape.matvec(w, b), Error);
}

TEST_CASE("tape: reset clears nodes and reuses capacity") {
  Tape tape;
  (void)tape.param(Tensor::scalar(1.0));
  CHECK(tape.node_count() == 1);
  tape.reset();
  CHECK(tape.node_count() == 0);
}
