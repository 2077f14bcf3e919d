#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "gridaimd/grid_model.hpp"

namespace gridaimd {

struct EvState {
  int id = 0;
  BusId bus = 0;
  double soc_pct = 0.0;
  double battery_capacity_kwh = 60.0;
  double commanded_current_a = 0.0;       // I_i
  double charger_max_current_a = 30.0;    // 7.2 kW at 240 V
  double charger_voltage_base_v = 240.0;
  int arrival_t_s = 0;
  double initial_soc_pct = 0.0;
  bool connected = false;
};

struct FleetConfig {
  double penetration = 1.0;  // fraction of houses with an EV
  double battery_kwh_min = 60.0, battery_kwh_max = 60.0;
  int arrival_min_s = 17 * 3600, arrival_max_s = 21 * 3600;
  double initial_soc_min_pct = 20.0, initial_soc_max_pct = 60.0;
  double charger_max_current_a = 30.0;
  double charger_voltage_base_v = 240.0;
  bool constant_power = false;  // default: power scales with local voltage
  std::uint64_t rng_seed = 0;
};

// round(penetration * houses) EVs on distinct house-ev buses, deterministic
// per seed. ev_buses is the pool of candidate buses (one per house).
std::vector<EvState> spawn_fleet(const FleetConfig& config, int houses,
                                 std::span<const BusId> ev_buses);

// (P kW, Q kvar) drawn by the charger at the commanded current. Zero when
// disconnected or full; P capped at the charger rating.
std::pair<double, double> charging_power(const EvState& ev, double v_local_pu,
                                         bool constant_power = false);

// Integrate delivered power over dt; SOC clamps at 100.
EvState step_charge(const EvState& ev, double delivered_p_kw, double dt_s);

}  // namespace gridaimd
