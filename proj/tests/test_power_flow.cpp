#include <cmath>

#include <stdexcept>

#include "doctest.h"

#include "gridaimd/power_flow.hpp"
#include "oracles.hpp"

using namespace gridaimd;
using gridaimd::testing::random_radial_case;
using gridaimd::testing::solve_phasor;

namespace {

// chain of `n` buses, per-unit impedances on a 100 kVA / 240 V base
NetworkTopology make_chain(int n, double r_pu, double x_pu, double v0 = 1.0) {
  double s_base = 100.0, v_nom = 240.0;
  double z_base = v_nom * v_nom / (s_base * 1e3);
  std::vector<Bus> buses;
  std::vector<LineSegment> lines;
  buses.push_back({0, BusKind::SubstationRoot, v_nom});
  for (int b = 1; b < n; ++b) {
    buses.push_back({b, BusKind::HouseLoad, v_nom});
    lines.push_back({b - 1, b, r_pu * z_base, x_pu * z_base, 0.0});
  }
  return NetworkTopology(std::move(buses), std::move(lines), 0, s_base, v_nom, v_nom, v0);
}

}  // namespace

TEST_CASE("no-load identity: V = V0 everywhere, zero feeder power") {
  NetworkTopology t = make_chain(5, 0.01, 0.02);
  PowerFlowSolution sol = solve_distflow(t, {});
  CHECK(sol.converged);
  for (double v : sol.voltage_mag_pu) CHECK(v == doctest::Approx(1.0));
  for (double d : sol.phase_angle_rad) CHECK(d == doctest::Approx(0.0));
  CHECK(sol.feeder_s_kva == doctest::Approx(0.0));
}

TEST_CASE("2-bus feeder matches the complex-phasor oracle to 1e-8") {
  NetworkTopology t = make_chain(2, 0.01, 0.01);
  std::vector<NodalInjection> loads{{1, 10.0, 0.0}};  // 0.1 pu on the 100 kVA base
  PowerFlowSolution sol = solve_distflow(t, loads, 1e-12, 100);
  REQUIRE(sol.converged);
  auto oracle = solve_phasor(t, loads);
  REQUIRE(oracle.converged);
  CHECK(std::abs(sol.voltage_mag_pu[1] - std::abs(oracle.voltage[1])) < 1e-8);
}

TEST_CASE("5-bus chain satisfies the loss-reconstruction oracle") {
  NetworkTopology t = make_chain(5, 0.01, 0.015);
  std::vector<NodalInjection> loads{{1, 5.0, 1.0}, {2, 8.0, -1.0}, {3, 4.0, 2.0}, {4, 6.0, 0.5}};
  PowerFlowSolution sol = solve_distflow(t, loads, 1e-12, 100);
  REQUIRE(sol.converged);

  // recompute losses independently from the solved flows: r (P^2+Q^2) / V^2
  double s_base = t.substation_rating_kva();
  double loss_p = 0.0;
  for (std::size_t li = 0; li < t.lines().size(); ++li) {
    const LineSegment& l = t.lines()[li];
    double v_base = t.bus(l.to_bus).nominal_voltage_v;
    double z_base = v_base * v_base / (s_base * 1e3);
    double r_pu = l.resistance_ohm / z_base;
    double p = sol.line_flow[li].active_kw / s_base;
    double q = sol.line_flow[li].reactive_kvar / s_base;
    double v_send = sol.voltage_mag_pu[t.bus_index(l.from_bus)];
    loss_p += r_pu * (p * p + q * q) / (v_send * v_send);
  }
  double sum_loads = 0.0;
  for (const auto& inj : loads) sum_loads += inj.active_kw;
  CHECK(sol.feeder_p_kw == doctest::Approx(sum_loads + loss_p * s_base).epsilon(1e-9));
}

TEST_CASE("lindistflow closed form on a 2-bus feeder is exact") {
  double r_pu = 0.013, x_pu = 0.019;
  NetworkTopology t = make_chain(2, r_pu, x_pu);
  double p_pu = 0.12, q_pu = 0.05;
  std::vector<NodalInjection> loads{{1, p_pu * 100.0, q_pu * 100.0}};
  PowerFlowSolution sol = solve_lindistflow(t, loads);
  REQUIRE(sol.converged);
  double expected_sq = 1.0 - 2.0 * (r_pu * p_pu + x_pu * q_pu);
  CHECK(sol.voltage_mag_pu[1] == doctest::Approx(std::sqrt(expected_sq)).epsilon(1e-15));
  // lossless aggregation: feeder power equals the sum of injections exactly
  CHECK(sol.feeder_p_kw == doctest::Approx(p_pu * 100.0).epsilon(1e-15));
}

TEST_CASE("lindistflow tracks the exact solver within 0.5% at light loading") {
  NetworkTopology t = make_chain(5, 0.01, 0.015);
  // loads at <= 20% of the base rating
  std::vector<NodalInjection> loads{{1, 4.0, 1.0}, {2, 5.0, 1.5}, {3, 5.0, 1.0}, {4, 6.0, 2.0}};
  PowerFlowSolution exact = solve_distflow(t, loads, 1e-12, 100);
  PowerFlowSolution lin = solve_lindistflow(t, loads);
  REQUIRE(exact.converged);
  REQUIRE(lin.converged);
  for (std::size_t i = 0; i < exact.voltage_mag_pu.size(); ++i) {
    double diff = std::abs(lin.voltage_mag_pu[i] - exact.voltage_mag_pu[i]);
    CHECK(diff <= 0.005);
    // losses only depress voltage: linearized voltages sit above the exact ones
    CHECK(lin.voltage_mag_pu[i] >= exact.voltage_mag_pu[i] - 1e-12);
  }
}

TEST_CASE("phase angles: zero flows give zero angles, active flow lags the end node") {
  NetworkTopology t = make_chain(2, 0.01, 0.02);
  PowerFlowSolution idle = solve_distflow(t, {});
  for (double d : idle.phase_angle_rad) CHECK(d == doctest::Approx(0.0));

  std::vector<NodalInjection> loads{{1, 10.0, 0.0}};
  PowerFlowSolution sol = solve_distflow(t, loads);
  REQUIRE(sol.converged);
  CHECK(sol.phase_angle_rad[1] < 0.0);  // x P > 0 lags the receiving bus
}

TEST_CASE("5-bus angles match the phasor oracle to 1e-6 rad") {
  NetworkTopology t = make_chain(5, 0.012, 0.02);
  std::vector<NodalInjection> loads{{1, 6.0, 2.0}, {2, 7.0, 1.0}, {3, 3.0, 1.0}, {4, 8.0, 2.5}};
  PowerFlowSolution sol = solve_distflow(t, loads, 1e-12, 100);
  REQUIRE(sol.converged);
  auto oracle = solve_phasor(t, loads);
  REQUIRE(oracle.converged);
  for (std::size_t i = 0; i < sol.phase_angle_rad.size(); ++i) {
    CHECK(std::abs(sol.phase_angle_rad[i] - std::arg(oracle.voltage[i])) < 1e-6);
  }
  // recover_phase_angles is consistent with the solution it was derived from
  auto again = recover_phase_angles(t, sol);
  for (std::size_t i = 0; i < again.size(); ++i) {
    CHECK(again[i] == doctest::Approx(sol.phase_angle_rad[i]).epsilon(1e-12));
  }
}

TEST_CASE("oracle equivalence on random radial topologies") {
  Rng rng(20240501);
  for (int trial = 0; trial < 40; ++trial) {
    auto rc = random_radial_case(rng);
    PowerFlowSolution sol = solve_distflow(rc.topology, rc.injections, 1e-10, 200);
    REQUIRE(sol.converged);
    auto oracle = solve_phasor(rc.topology, rc.injections);
    REQUIRE(oracle.converged);
    for (std::size_t i = 0; i < sol.voltage_mag_pu.size(); ++i) {
      CHECK(std::abs(sol.voltage_mag_pu[i] - std::abs(oracle.voltage[i])) < 1e-6);
      CHECK(std::abs(sol.phase_angle_rad[i] - std::arg(oracle.voltage[i])) < 1e-6);
    }
    double s_base = rc.topology.substation_rating_kva();
    CHECK(std::abs(sol.feeder_p_kw / s_base - oracle.feeder_s_pu.real()) < 1e-6);
    CHECK(std::abs(sol.feeder_q_kvar / s_base - oracle.feeder_s_pu.imag()) < 1e-6);
  }
}

TEST_CASE("conservation: lindistflow feeder power equals the injection sum exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto rc = random_radial_case(rng);
    PowerFlowSolution lin = solve_lindistflow(rc.topology, rc.injections);
    double sum_p = 0.0, sum_q = 0.0;
    for (const auto& inj : rc.injections) {
      sum_p += inj.active_kw;
      sum_q += inj.reactive_kvar;
    }
    CHECK(lin.feeder_p_kw == doctest::Approx(sum_p).epsilon(1e-12));
    CHECK(lin.feeder_q_kvar == doctest::Approx(sum_q).epsilon(1e-12));
  }
}

TEST_CASE("monotonicity: raising one load weakly lowers every downstream voltage") {
  NetworkTopology t = make_chain(6, 0.01, 0.01);
  std::vector<NodalInjection> loads{{1, 4.0, 1.0}, {3, 6.0, 1.0}, {5, 5.0, 1.0}};
  PowerFlowSolution before = solve_distflow(t, loads, 1e-12, 100);
  loads[1].active_kw += 5.0;  // bus 3
  PowerFlowSolution after = solve_distflow(t, loads, 1e-12, 100);
  REQUIRE(before.converged);
  REQUIRE(after.converged);
  for (int b = 3; b < 6; ++b) {
    CHECK(after.voltage_mag_pu[static_cast<std::size_t>(b)] <=
          before.voltage_mag_pu[static_cast<std::size_t>(b)] + 1e-12);
  }
}

TEST_CASE("voltage collapse is reported as non-convergence with a diagnostic") {
  NetworkTopology t = make_chain(2, 0.2, 0.2);
  std::vector<NodalInjection> loads{{1, 500.0, 100.0}};  // 5 pu on a 0.28 pu impedance
  PowerFlowSolution sol = solve_distflow(t, loads);
  CHECK_FALSE(sol.converged);
  CHECK_FALSE(sol.diagnostic.empty());
}

TEST_CASE("input validation") {
  NetworkTopology t = make_chain(3, 0.01, 0.01);
  CHECK_THROWS_AS(solve_distflow(t, std::vector<NodalInjection>{{0, 1.0, 0.0}}, 1e-8, 50),
                  std::invalid_argument);  // injection on the root
  CHECK_THROWS_AS(solve_distflow(t, std::vector<NodalInjection>{{42, 1.0, 0.0}}, 1e-8, 50),
                  std::out_of_range);  // unknown bus
  CHECK_THROWS_AS(solve_distflow(t, {}, -1.0, 50), std::invalid_argument);
}
