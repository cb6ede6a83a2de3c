#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "evlat/errors.hpp"
#include "evlat/stability.hpp"

using namespace evlat;

TEST_CASE("deterministic check: zero noise means zero deviation") {
  Rng rng(1);
  auto rep = run_deterministic_check(4, 1.0, 0.0, 8, 50, rng);
  for (const auto& rec : rep.records) {
    CHECK(rec.max_entry_dev == 0.0);
    CHECK(rec.frob_dev == 0.0);
  }
}

TEST_CASE("deterministic check: bound holds and averaging keeps deviations well below it") {
  Rng rng(2);
  auto rep = run_deterministic_check(4, 1.0, 0.1, 16, 1000, rng);
  CHECK(rep.violations == 0);
  double worst = 0.0, mean = 0.0;
  for (const auto& rec : rep.records) {
    worst = std::max(worst, rec.max_entry_dev);
    mean += rec.max_entry_dev;
  }
  CHECK(worst <= 0.1);
  CHECK(mean / rep.records.size() < 0.05);
}

TEST_CASE("deterministic check: cohort-scale Frobenius bound at 19 channels") {
  Rng rng(3);
  auto rep = run_deterministic_check(19, 1.0, 0.1, 8, 50, rng);
  const double frob_bound = 1.0 * 0.1 * std::sqrt(19.0 * 18.0);
  for (const auto& rec : rep.records) {
    CHECK(rec.frob_dev <= frob_bound);
    CHECK(rec.frob_dev <= rec.frob_avg_bound + 1e-12);
  }
}

TEST_CASE("deterministic check: full parameter sweep has zero violations") {
  for (double alpha : {0.5, 1.0, 2.0, 5.0})
    for (double eps : {0.01, 0.1, 0.5})
      for (int c : {2, 4}) {
        Rng rng(static_cast<std::uint64_t>(alpha * 100 + eps * 10 + c));
        auto rep = run_deterministic_check(c, alpha, eps, 8, 200, rng);
        CHECK(rep.violations == 0);
      }
}

TEST_CASE("subgaussian tail: vacuous at tau = 0, sharp in the far tail") {
  Rng rng(4);
  auto rep = run_subgaussian_check(4, 1.0, 0.1, 128, 2000, {0.0, 0.01, 0.02, 0.05}, rng);
  CHECK(rep.tail[0].bound == 2.0);
  CHECK(rep.tail[0].empirical <= 1.0);
  // tau = 0.05: bound = 2 exp(-16) ~ 2.3e-7, so no exceedance is tolerated.
  CHECK(rep.tail[3].bound == doctest::Approx(2.0 * std::exp(-16.0)).epsilon(1e-9));
  CHECK(rep.tail[3].empirical == 0.0);
}

TEST_CASE("subgaussian tail: doubling MS squares the bound and does not hurt empirically") {
  std::vector<double> taus = {0.02};
  Rng r1(5), r2(5);
  auto rep1 = run_subgaussian_check(4, 1.0, 0.1, 64, 3000, taus, r1);
  auto rep2 = run_subgaussian_check(4, 1.0, 0.1, 128, 3000, taus, r2);
  CHECK(rep2.tail[0].bound ==
        doctest::Approx(rep1.tail[0].bound * rep1.tail[0].bound / 2.0).epsilon(1e-6));
  CHECK(rep2.tail[0].empirical <= rep1.tail[0].empirical + 0.02);
}

TEST_CASE("gaussian expectation: bound holds and shrinks to zero with sigma") {
  Rng rng(6);
  auto rep = run_gaussian_expectation_check(4, 1.0, 1.0, 1, 2000, rng);
  CHECK(rep.mean_abs_dev <= rep.mean_abs_bound + rep.mean_abs_slack);
  CHECK(rep.mean_abs_bound == doctest::Approx(std::sqrt(2.0 / 3.14159265358979)).epsilon(1e-6));

  Rng rng2(7);
  auto small = run_gaussian_expectation_check(4, 1.0, 1e-4, 1, 200, rng2);
  CHECK(small.mean_abs_dev < 1e-3);
}

TEST_CASE("gaussian expectation: averaging contracts like the root of MS") {
  // Small sigma keeps the smoothing bias negligible next to the 1/sqrt(MS)
  // statistical term, so quadrupling MS should roughly halve E|Delta|.
  Rng r1(8), r2(8);
  auto a = run_gaussian_expectation_check(4, 1.0, 0.02, 16, 3000, r1);
  auto b = run_gaussian_expectation_check(4, 1.0, 0.02, 64, 3000, r2);
  double ratio = b.mean_abs_dev / a.mean_abs_dev;
  CHECK(ratio > 0.4);
  CHECK(ratio < 0.6);
}

TEST_CASE("reports: identical seeds give identical bytes") {
  Rng r1(99), r2(99);
  auto a = run_deterministic_check(3, 2.0, 0.05, 8, 100, r1);
  auto b = run_deterministic_check(3, 2.0, 0.05, 8, 100, r2);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_csv() == b.to_csv());
  CHECK(!a.to_csv().empty());
}
