#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gridaimd/engine.hpp"

namespace gridaimd {

struct Scorecard {
  std::string scenario;
  double max_overload_pct = 0.0;
  double avg_power_kw = 0.0;
  double avg_final_soc_pct = 0.0;
  double fairness = 1.0;
  std::int64_t comm_exchanges_per_ev = 0;
};

// Jain's index (sum x)^2 / (N sum x^2); 1 for equal shares, 1/N for one-hot.
double jain_fairness(std::span<const double> x);

// max(0, (max(series) - rated) / rated * 100)
double max_overload_pct(std::span<const double> feeder_s_kva, double s_rated_kva);

double mean(std::span<const double> x);

// Arithmetic means over a completed run's fleet.
double avg_final_soc(std::span<const EvSummary> fleet);
double avg_power(std::span<const EvSummary> fleet);

// Communication exchanges per EV as accounted by the controllers.
std::int64_t comm_count(const SimulationTrace& trace);

// Elementwise minimum over load buses in volts at the secondary base; the
// engine's running-min channel.
std::vector<double> min_voltage_series(const SimulationTrace& trace);

// Full Table-1-style scorecard as a pure function of the trace.
Scorecard scorecard_from_trace(const SimulationTrace& trace);

std::string scorecard_csv_header();
std::string scorecard_csv_row(const Scorecard& s);
std::string scorecard_table(std::span<const Scorecard> cards);

}  // namespace gridaimd
