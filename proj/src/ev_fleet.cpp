#include "gridaimd/ev_fleet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gridaimd/rng.hpp"

namespace gridaimd {

std::vector<EvState> spawn_fleet(const FleetConfig& config, int houses,
                                 std::span<const BusId> ev_buses) {
  if (houses <= 0) throw std::invalid_argument("houses must be positive");
  if (config.penetration < 0.0 || config.penetration > 1.0) {
    throw std::invalid_argument("penetration must be in [0, 1]");
  }
  if (static_cast<int>(ev_buses.size()) < houses) {
    throw std::invalid_argument("need one candidate house-ev bus per house");
  }

  int count = static_cast<int>(std::llround(config.penetration * houses));
  std::vector<EvState> fleet;
  fleet.reserve(static_cast<std::size_t>(count));
  if (count == 0) return fleet;

  Rng rng = Rng(config.rng_seed).derive("fleet");

  // Partial Fisher-Yates over the bus pool picks `count` distinct buses.
  std::vector<BusId> pool(ev_buses.begin(), ev_buses.begin() + houses);
  for (int i = 0; i < count; ++i) {
    int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(houses - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }

  for (int i = 0; i < count; ++i) {
    Rng ev_rng = rng.derive("ev", static_cast<std::uint64_t>(i));
    EvState ev;
    ev.id = i;
    ev.bus = pool[static_cast<std::size_t>(i)];
    ev.battery_capacity_kwh = ev_rng.uniform(config.battery_kwh_min, config.battery_kwh_max);
    ev.arrival_t_s = config.arrival_min_s +
                     static_cast<int>(ev_rng.below(static_cast<std::uint64_t>(
                         std::max(1, config.arrival_max_s - config.arrival_min_s))));
    ev.initial_soc_pct = ev_rng.uniform(config.initial_soc_min_pct, config.initial_soc_max_pct);
    ev.soc_pct = ev.initial_soc_pct;
    ev.charger_max_current_a = config.charger_max_current_a;
    ev.charger_voltage_base_v = config.charger_voltage_base_v;
    ev.commanded_current_a = 0.0;
    ev.connected = false;
    fleet.push_back(ev);
  }
  return fleet;
}

std::pair<double, double> charging_power(const EvState& ev, double v_local_pu, bool constant_power) {
  if (!ev.connected || ev.soc_pct >= 100.0) return {0.0, 0.0};
  double rating_kw = ev.charger_max_current_a * ev.charger_voltage_base_v / 1000.0;
  double v = constant_power ? 1.0 : v_local_pu;
  double p = v * ev.charger_voltage_base_v * ev.commanded_current_a / 1000.0;
  return {std::min(p, rating_kw), 0.0};
}

EvState step_charge(const EvState& ev, double delivered_p_kw, double dt_s) {
  if (dt_s <= 0) throw std::invalid_argument("dt must be positive");
  EvState next = ev;
  double energy_kwh = delivered_p_kw * dt_s / 3600.0;
  next.soc_pct = std::min(100.0, ev.soc_pct + 100.0 * energy_kwh / ev.battery_capacity_kwh);
  return next;
}

}  // namespace gridaimd
