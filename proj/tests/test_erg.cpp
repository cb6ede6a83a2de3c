#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evlat/erg.hpp"
#include "evlat/rng.hpp"

using namespace evlat;

TEST_CASE("last_event_before: none, inclusive boundary, strict predecessor") {
  std::vector<double> t = {0.2, 0.5};
  CHECK(last_event_before(t, 0.1) == 0.0);
  CHECK(last_event_before(t, 0.5) == 0.5);
  CHECK(last_event_before(t, 0.49) == 0.2);
}

TEST_CASE("edge_score: anchors and the Lipschitz property") {
  CHECK(edge_score(0.0, 2.0) == 1.0);
  CHECK(edge_score(0.5, 2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(edge_score(-0.5, 2.0) == edge_score(0.5, 2.0));

  Rng rng(3);
  for (int a = 0; a < 4; ++a) {
    double alpha = std::vector<double>{0.5, 1.0, 2.0, 5.0}[a];
    for (int i = 0; i < 250000; ++i) {
      double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
      CHECK(std::fabs(edge_score(x, alpha) - edge_score(y, alpha)) <=
            alpha * std::fabs(x - y) + 1e-12);
    }
  }
}

namespace {

EventRealization two_channel(std::vector<double> a, std::vector<double> b) {
  EventRealization r;
  r.channels = {std::move(a), std::move(b)};
  return r;
}

}  // namespace

TEST_CASE("build_adjacency: identical channels give unit off-diagonal edges") {
  std::vector<EventRealization> samples = {two_channel({0.1, 0.4, 0.9}, {0.1, 0.4, 0.9})};
  auto adj = build_adjacency(samples, 8, 1.0, 2.0, false);
  CHECK(adj.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(adj.at(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(adj.at(0, 0) == 0.0);
  CHECK(adj.at(1, 1) == 0.0);
}

TEST_CASE("build_adjacency: empty channel decays with the other channel's last event") {
  // One grid point at t = 1: lag is t_last(channel 0) - 0.
  std::vector<EventRealization> samples = {two_channel({0.7}, {})};
  auto adj = build_adjacency(samples, 1, 1.0, 2.0, false);
  CHECK(adj.at(0, 1) == doctest::Approx(std::exp(-2.0 * 0.7)).epsilon(1e-12));
  CHECK(adj.at(1, 0) == doctest::Approx(std::exp(-2.0 * 0.7)).epsilon(1e-12));
}

TEST_CASE("build_adjacency: already symmetric under the even edge map") {
  Rng rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EventRealization> samples;
    for (int s = 0; s < 3; ++s) {
      EventRealization r;
      for (int c = 0; c < 4; ++c) {
        std::vector<double> ev;
        double t = 0.0;
        while ((t += rng.exponential(8.0)) < 2.0) ev.push_back(t);
        r.channels.push_back(ev);
      }
      samples.push_back(r);
    }
    auto adj = build_adjacency(samples, 16, 2.0, 2.0, false);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) CHECK(std::fabs(adj.at(i, j) - adj.at(j, i)) < 1e-12);
  }
}

TEST_CASE("build_adjacency: range and diagonal invariants over randomized realizations") {
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<EventRealization> samples;
    int s_mc = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < s_mc; ++s) {
      EventRealization r;
      for (int c = 0; c < 3; ++c) {
        std::vector<double> ev;
        double t = 0.0;
        while ((t += rng.exponential(rng.uniform(2.0, 20.0))) < 2.0) ev.push_back(t);
        r.channels.push_back(ev);
      }
      samples.push_back(r);
    }
    auto adj = build_adjacency(samples, 4, 2.0, rng.uniform(0.5, 5.0), trial % 2 == 0);
    for (int i = 0; i < 3; ++i) {
      CHECK(adj.at(i, i) == 0.0);
      for (int j = 0; j < 3; ++j) {
        CHECK(adj.at(i, j) >= 0.0);
        CHECK(adj.at(i, j) <= 1.0);
      }
    }
  }
}

TEST_CASE("build_adjacency_from_trajectory: anchors and invariants") {
  Tensor z(2, 4);
  for (int t = 0; t < 4; ++t) {
    z.at(0, t) = 1.0;
    z.at(1, t) = 1.0;
  }
  auto same = build_adjacency_from_trajectory(z, 1.0, TrajectoryKernel::Exp);
  CHECK(same.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  Tensor z2(2, 1);
  z2.at(0, 0) = 0.0;
  z2.at(1, 0) = 1.0;
  auto adj = build_adjacency_from_trajectory(z2, 1.0, TrajectoryKernel::Exp);
  CHECK(adj.at(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  auto gauss = build_adjacency_from_trajectory(z2, 2.0, TrajectoryKernel::Gauss);
  CHECK(gauss.at(0, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  auto inv1 = build_adjacency_from_trajectory(z2, 3.0, TrajectoryKernel::Inv1);
  CHECK(inv1.at(0, 1) == doctest::Approx(0.25).epsilon(1e-12));

  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    Tensor m(5, 7);
    for (double& v : m.data) v = rng.uniform(-2.0, 2.0);
    auto a = build_adjacency_from_trajectory(m, 1.5, TrajectoryKernel::Exp);
    for (int i = 0; i < 5; ++i) {
      CHECK(a.at(i, i) == 0.0);
      for (int j = 0; j < 5; ++j) CHECK(a.at(i, j) == a.at(j, i));
    }
  }
}

TEST_CASE("pearson_corr: perfect, anti, and independent channels") {
  Rng rng(13);
  Tensor x(3, 10000);
  for (int t = 0; t < 10000; ++t) {
    double v = rng.normal();
    x.at(0, t) = v;
    x.at(1, t) = -v;
    x.at(2, t) = rng.normal();
  }
  auto c = pearson_corr(x);
  CHECK(c.at(0, 1) == doctest::Approx(-(1.0 - 1e-7)).epsilon(1e-12));
  CHECK(std::fabs(c.at(0, 2)) < 0.05);

  Tensor same(2, 100);
  for (int t = 0; t < 100; ++t) {
    same.at(0, t) = std::sin(0.1 * t);
    same.at(1, t) = std::sin(0.1 * t);
  }
  auto cs = pearson_corr(same);
  CHECK(cs.at(0, 1) == doctest::Approx(1.0 - 1e-7).epsilon(1e-12));

  Tensor degenerate(2, 100);
  for (int t = 0; t < 100; ++t) degenerate.at(1, t) = std::sin(0.3 * t);
  CHECK_THROWS_AS(pearson_corr(degenerate), Error);
}

TEST_CASE("fisher_z_reg: exact-match construction is exactly zero") {
  Rng rng(14);
  Tensor x(4, 500);
  for (double& v : x.data) v = rng.normal();
  auto s_obs = pearson_corr(x);
  Adjacency adj;
  adj.C = 4;
  adj.a.assign(16, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) adj.at(i, j) = (s_obs.at(i, j) + 1.0) / 2.0;
  CHECK(fisher_z_reg(adj, s_obs, 1.0) == doctest::Approx(0.0).epsilon(1e-20));
}

TEST_CASE("fisher_z_reg: single-pair anchors") {
  Adjacency adj;
  adj.C = 2;
  adj.a = {0.0, 0.5, 0.5, 0.0};
  Tensor s(2, 2);
  s.at(0, 1) = 0.0;
  s.at(1, 0) = 0.0;
  CHECK(fisher_z_reg(adj, s, 1.0) == doctest::Approx(0.0).epsilon(1e-15));

  s.at(0, 1) = 0.5;
  s.at(1, 0) = 0.5;
  double v = fisher_z_reg(adj, s, 1.0);
  CHECK(v == doctest::Approx(std::atanh(0.5) * std::atanh(0.5) / 2.0).epsilon(1e-9));
  CHECK(v == doctest::Approx(0.1509).epsilon(1e-3));
}
