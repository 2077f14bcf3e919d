#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <vector>

#include <stdexcept>

#include "doctest.h"

#include "gridaimd/controller.hpp"
#include "gridaimd/rng.hpp"
#include "oracles.hpp"

using namespace gridaimd;
using gridaimd::testing::make_stub_net;

namespace {

FeatureWindow constant_window(double v = 0.98, double delta = -0.001, int len = 60) {
  FeatureWindow w;
  w.v.assign(static_cast<std::size_t>(len), v);
  w.v_sq.assign(static_cast<std::size_t>(len), v * v);
  w.delta.assign(static_cast<std::size_t>(len), delta);
  w.t_k = 19;
  return w;
}

CongestionVerdict uncongested() { return {false, VerdictSource::IdealBroadcast, std::nullopt}; }
CongestionVerdict congested() { return {true, VerdictSource::IdealBroadcast, std::nullopt}; }

}  // namespace

TEST_CASE("the three canonical transitions are exact") {
  AimdParams p;  // alpha 1, beta 0.5, v_min 0.9
  CHECK(aimd_step(10.0, uncongested(), 0.98, p, 30.0) == doctest::Approx(11.0));
  CHECK(aimd_step(20.0, congested(), 0.98, p, 30.0) == doctest::Approx(10.0));
  CHECK(aimd_step(10.0, uncongested(), 0.89, p, 30.0) == doctest::Approx(5.0));
  CHECK(aimd_step(30.0, uncongested(), 0.98, p, 30.0) == doctest::Approx(30.0));  // clamp
}

TEST_CASE("aimd_step validates its inputs") {
  AimdParams p;
  CHECK_THROWS_AS(aimd_step(-1.0, uncongested(), 1.0, p, 30.0), std::invalid_argument);
  CHECK_THROWS_AS(aimd_step(31.0, uncongested(), 1.0, p, 30.0), std::invalid_argument);
  AimdParams bad = p;
  bad.beta = 1.5;
  CHECK_THROWS_AS(aimd_step(1.0, uncongested(), 1.0, bad, 30.0), std::invalid_argument);
}

TEST_CASE("permanently clear path reaches I_max in ceil((I_max - I0)/alpha) periods") {
  AimdParams p;
  double current = 3.5;
  double i_max = 30.0;
  int expected = static_cast<int>(std::ceil((i_max - current) / p.alpha_a));
  int periods = 0;
  while (current < i_max) {
    current = aimd_step(current, uncongested(), 1.0, p, i_max);
    ++periods;
  }
  CHECK(periods == expected);
  CHECK(aimd_step(current, uncongested(), 1.0, p, i_max) == doctest::Approx(i_max));
}

TEST_CASE("permanent congestion decays geometrically") {
  AimdParams p;
  double i0 = 24.0;
  double current = i0;
  for (int n = 1; n <= 8; ++n) {
    current = aimd_step(current, congested(), 1.0, p, 30.0);
    CHECK(current == doctest::Approx(i0 * std::pow(p.beta, n)));
  }
}

TEST_CASE("aimd_step output stays within [0, I_max]") {
  AimdParams p;
  Rng rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    double i_max = rng.uniform(1.0, 40.0);
    double current = rng.uniform(0.0, i_max);
    CongestionVerdict v{rng.uniform01() < 0.5, VerdictSource::IdealBroadcast, std::nullopt};
    double next = aimd_step(current, v, rng.uniform(0.85, 1.0), p, i_max);
    CHECK(next >= 0.0);
    CHECK(next <= i_max);
  }
}

TEST_CASE("synchronized controllers sharing one bottleneck converge to within alpha") {
  AimdParams p;
  const int n = 100;
  const double i_max = 30.0;
  const double capacity = 1500.0;  // fair share 15 A per controller
  Rng rng(123);
  std::vector<double> currents(n);
  for (double& c : currents) c = rng.uniform(0.0, i_max);

  for (int period = 0; period < 60; ++period) {
    double total = 0.0;
    for (double c : currents) total += c;
    CongestionVerdict verdict{total >= capacity, VerdictSource::IdealBroadcast, std::nullopt};
    for (double& c : currents) c = aimd_step(c, verdict, 1.0, p, i_max);
  }
  auto [lo, hi] = std::minmax_element(currents.begin(), currents.end());
  CHECK(*hi - *lo <= p.alpha_a + 1e-9);
}

TEST_CASE("ideal CE detection compares against the rating with >= semantics") {
  CHECK_FALSE(detect_ce_ideal(2400.0, 2500.0).congested);
  CHECK(detect_ce_ideal(2500.0, 2500.0).congested);
  CHECK(detect_ce_ideal(2600.0, 2500.0).congested);
  CHECK_FALSE(detect_ce_ideal(100.0, 2500.0).estimate_kva.has_value());
  CHECK_THROWS_AS(detect_ce_ideal(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("estimated CE detection reduces to the ideal comparison with a perfect stub") {
  NeuralNet high = make_stub_net(2600.0);
  auto verdict = detect_ce_estimated(high, constant_window(), 2500.0, 0.0);
  CHECK(verdict.congested);
  CHECK(verdict.source == VerdictSource::LocalEstimate);
  REQUIRE(verdict.estimate_kva.has_value());
  CHECK(*verdict.estimate_kva == doctest::Approx(2600.0));

  NeuralNet low = make_stub_net(2450.0);
  CHECK_FALSE(detect_ce_estimated(low, constant_window(), 2500.0, 0.0).congested);
  CHECK(detect_ce_estimated(low, constant_window(), 2500.0, 100.0).congested);  // margin

  NeuralNet untrained;
  CHECK_THROWS(detect_ce_estimated(untrained, constant_window(), 2500.0, 0.0));
}

TEST_CASE("local estimator controller acts once per period and counts one download") {
  NeuralNet low = make_stub_net(2000.0);
  AimdParams p;
  LocalEstimatorController ctl(&low, p, 30.0, 0, 24);
  CHECK(ctl.comm_exchanges() == 1);

  double current = 0.0;
  for (int t = 0; t < 180; ++t) current = ctl.on_measurement(t, 0.98, -0.001, 2500.0);
  // three full periods of additive increase
  CHECK(current == doctest::Approx(3.0));

  NeuralNet high = make_stub_net(2600.0);
  LocalEstimatorController ctl2(&high, p, 30.0, 0, 24);
  double c2 = 0.0;
  for (int t = 0; t < 120; ++t) c2 = ctl2.on_measurement(t, 0.98, -0.001, 2500.0);
  CHECK(c2 == doctest::Approx(0.0));  // multiplicative branch from zero stays zero
  CHECK(ctl2.last_estimate_kva() == doctest::Approx(2600.0));

  // an offset controller waits for its first full window
  LocalEstimatorController ctl3(&low, p, 30.0, 30, 24);
  double c3 = 0.0;
  for (int t = 0; t < 90; ++t) c3 = ctl3.on_measurement(t, 0.98, -0.001, 2500.0);
  CHECK(c3 == doctest::Approx(1.0));  // boundary at t=89 covers the full window [30, 90)

  CHECK_THROWS(LocalEstimatorController(nullptr, p, 30.0, 0, 24));
}
