#include <doctest.h>

#include <cmath>

#include "qfc/correlation.hpp"
#include "qfc/errors.hpp"

using namespace qfc;
using doctest::Approx;

namespace {

HbtSimulation small_run(std::uint64_t seed) {
  HbtSimulation s;
  s.total_rate_cps = 2e6;
  s.duration_s = 1.0;
  s.seed = seed;
  return s;
}

G2Params emitter(double sbr_db, double jitter = 0.0) {
  G2Params p;
  p.rho = sbr_db_to_rho(sbr_db);
  p.tau1_ps = 1700;
  p.jitter_fwhm_ps = jitter;
  return p;
}

}  // namespace

TEST_CASE("deterministic for a fixed seed") {
  const auto a = simulate_hbt(emitter(7.5, 550), small_run(3));
  const auto b = simulate_hbt(emitter(7.5, 550), small_run(3));
  const auto c = simulate_hbt(emitter(7.5, 550), small_run(4));
  CHECK(a.counts() == b.counts());
  CHECK(a.to_csv() == b.to_csv());
  CHECK(a.metadata_text() == b.metadata_text());
  CHECK(a.counts() != c.counts());
  REQUIRE(a.metadata().has_value());
  CHECK(a.metadata()->seed == 3);
  CHECK(a.bins() == 400);
}

TEST_CASE("background-only histogram is flat within 4 sigma") {
  G2Params p = emitter(0.0);
  p.rho = 0.0;
  const auto h = simulate_hbt(p, small_run(11));
  const double level = h.uncorrelated_level();
  for (std::size_t i = 0; i < h.bins(); ++i) {
    CHECK(std::abs(static_cast<double>(h.counts()[i]) - level) <= 4.0 * std::sqrt(level));
  }
}

TEST_CASE("far wings match the singles-rate prediction within 3 sigma") {
  const auto h = simulate_hbt(emitter(7.5, 550), small_run(12));
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < h.bins(); ++i) {
    if (std::abs(h.center(i)) > 12000) {
      sum += static_cast<double>(h.counts()[i]);
      ++n;
    }
  }
  const double expected = h.uncorrelated_level() * n;
  CHECK(std::abs(sum - expected) <= 3.0 * std::sqrt(expected));
}

TEST_CASE("dip is present with the model depth") {
  auto sim = small_run(13);
  sim.duration_s = 4.0;
  const auto p = emitter(7.5);
  const auto h = simulate_hbt(p, sim);
  const double level = h.uncorrelated_level();
  // Two central bins straddle zero.
  const double centre = 0.5 * static_cast<double>(h.counts()[199] + h.counts()[200]);
  const double expected = level * g2_bin_average(-100, 100, p);
  CHECK(std::abs(centre - expected) <= 4.0 * std::sqrt(expected / 2.0));
}

TEST_CASE("unresolvably fast emitter gives a flat histogram") {
  G2Params p;
  p.rho = 1.0;
  p.tau1_ps = 0.5;
  auto sim = small_run(14);
  const auto h = simulate_hbt(p, sim);
  const double level = h.uncorrelated_level();
  for (std::size_t i = 0; i < h.bins(); ++i) {
    if (i == 199 || i == 200) continue;
    CHECK(std::abs(static_cast<double>(h.counts()[i]) - level) <= 4.0 * std::sqrt(level));
  }
}

TEST_CASE("resource and domain errors") {
  auto sim = small_run(1);
  sim.max_events = 1000;
  CHECK_THROWS_AS(simulate_hbt(emitter(7.5), sim), ResourceError);
  G2Params bunched = emitter(7.5);
  bunched.bunching_amplitude = 0.3;
  bunched.tau2_ps = 5000;
  CHECK_THROWS_AS(simulate_hbt(bunched, small_run(1)), DomainError);
  sim = small_run(1);
  sim.total_rate_cps = 1e9;
  CHECK_THROWS_AS(simulate_hbt(emitter(30), sim), DomainError);
  sim = small_run(1);
  sim.duration_s = 0;
  CHECK_THROWS_AS(simulate_hbt(emitter(7.5), sim), DomainError);
}

TEST_CASE("zero-background simulation: SBR at the upper bound, one-sided interval") {
  G2Params p = emitter(300.0);
  auto sim = small_run(21);
  sim.total_rate_cps = 4e6;
  const auto h = simulate_hbt(p, sim);
  const auto f = fit_g2(h, 0.0);
  CHECK(f.sbr_db == Approx(30.0));
  REQUIRE(f.fit.intervals.size() == 3);
  CHECK(f.fit.intervals[0].upper_at_bound);
  CHECK(f.fit.intervals[0].one_sided());
  CHECK(f.g2_zero < 0.05);
}

TEST_CASE("simulate then fit recovers the generator") {
  const auto truth = emitter(7.5, 550);
  auto sim = small_run(22);
  sim.total_rate_cps = 4e6;
  const auto h = simulate_hbt(truth, sim);
  const auto f = fit_g2(h, 550.0);
  CHECK(f.fit.intervals[0].contains(7.5));
  CHECK(std::abs(f.g2_zero - g2_zero(truth)) < 0.05);
  CHECK(f.fit.intervals[1].contains(1700.0));
}
