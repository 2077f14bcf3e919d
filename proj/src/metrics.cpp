#include "gridaimd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gridaimd {

double jain_fairness(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("fairness input must be non-empty");
  double sum = 0.0, sum_sq = 0.0;
  for (double v : x) {
    if (v < 0.0) throw std::invalid_argument("fairness input must be non-negative");
    sum += v;
    sum_sq += v * v;
  }
  if (sum_sq == 0.0) throw std::invalid_argument("fairness input must not be all zero");
  return sum * sum / (static_cast<double>(x.size()) * sum_sq);
}

double max_overload_pct(std::span<const double> feeder_s_kva, double s_rated_kva) {
  if (feeder_s_kva.empty()) throw std::invalid_argument("feeder series must be non-empty");
  if (s_rated_kva <= 0.0) throw std::invalid_argument("rating must be positive");
  double peak = *std::max_element(feeder_s_kva.begin(), feeder_s_kva.end());
  return std::max(0.0, (peak - s_rated_kva) / s_rated_kva * 100.0);
}

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty range");
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double avg_final_soc(std::span<const EvSummary> fleet) {
  if (fleet.empty()) throw std::invalid_argument("fleet is empty");
  double sum = 0.0;
  for (const EvSummary& ev : fleet) sum += ev.final_soc_pct;
  return sum / static_cast<double>(fleet.size());
}

double avg_power(std::span<const EvSummary> fleet) {
  if (fleet.empty()) throw std::invalid_argument("fleet is empty");
  double sum = 0.0;
  for (const EvSummary& ev : fleet) sum += ev.avg_power_kw;
  return sum / static_cast<double>(fleet.size());
}

std::int64_t comm_count(const SimulationTrace& trace) {
  if (trace.ev_summary.empty()) return 0;
  return trace.ev_summary.front().comm_exchanges;
}

std::vector<double> min_voltage_series(const SimulationTrace& trace) {
  if (trace.min_voltage_v.empty()) {
    throw std::invalid_argument("trace carries no minimum-voltage channel");
  }
  return trace.min_voltage_v;
}

Scorecard scorecard_from_trace(const SimulationTrace& trace) {
  Scorecard sc;
  sc.scenario = trace.scenario;
  sc.max_overload_pct = max_overload_pct(trace.feeder_s_kva, trace.s_rated_kva);
  if (!trace.ev_summary.empty()) {
    std::vector<double> powers;
    powers.reserve(trace.ev_summary.size());
    bool any_power = false;
    for (const EvSummary& ev : trace.ev_summary) {
      powers.push_back(ev.avg_power_kw);
      any_power = any_power || ev.avg_power_kw > 0.0;
    }
    sc.avg_power_kw = avg_power(trace.ev_summary);
    sc.avg_final_soc_pct = avg_final_soc(trace.ev_summary);
    sc.fairness = any_power ? jain_fairness(powers) : 1.0;
    sc.comm_exchanges_per_ev = comm_count(trace);
  }
  return sc;
}

std::string scorecard_csv_header() {
  return "scenario,max_overload_pct,avg_power_kw,avg_final_soc_pct,fairness,comm_exchanges_per_ev";
}

std::string scorecard_csv_row(const Scorecard& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%lld", s.scenario.c_str(),
                s.max_overload_pct, s.avg_power_kw, s.avg_final_soc_pct, s.fairness,
                static_cast<long long>(s.comm_exchanges_per_ev));
  return buf;
}

std::string scorecard_table(std::span<const Scorecard> cards) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %14s %12s %10s %10s %12s\n", "scenario", "overload(%)",
                "avg_P(kW)", "SOC(%)", "fairness", "comm/EV");
  out << buf;
  for (const Scorecard& s : cards) {
    std::snprintf(buf, sizeof buf, "%-14s %14.2f %12.2f %10.2f %10.3f %12lld\n", s.scenario.c_str(),
                  s.max_overload_pct, s.avg_power_kw, s.avg_final_soc_pct, s.fairness,
                  static_cast<long long>(s.comm_exchanges_per_ev));
    out << buf;
  }
  return out.str();
}

}  // namespace gridaimd
