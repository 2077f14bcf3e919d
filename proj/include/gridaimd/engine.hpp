#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gridaimd/controller.hpp"
#include "gridaimd/estimator.hpp"
#include "gridaimd/ev_fleet.hpp"
#include "gridaimd/grid_model.hpp"
#include "gridaimd/power_flow.hpp"
#include "gridaimd/profiles.hpp"

namespace gridaimd {

enum class ScenarioMode { NoEv, NoControl, IdealAimd, ProposedAimd };

std::string to_string(ScenarioMode mode);

struct ScenarioConfig {
  ScenarioMode mode = ScenarioMode::NoControl;
  int duration_s = 86400;
  std::uint64_t seed = 0;
  double penetration = 1.0;
  int profile_day = 0;
  FleetConfig fleet;  // rng_seed is derived from `seed`
  AimdParams aimd;
  bool stagger_periods = true;  // per-EV period offsets; offset 0 for all when false
  bool latch_ce = true;         // ideal mode: latch any congested second in the period
  std::vector<BusId> watch_buses;
  SolverOptions solver;
};

struct EvSummary {
  int ev_id = 0;
  BusId bus = 0;
  int arrival_t_s = 0;
  double initial_soc_pct = 0.0;
  double final_soc_pct = 0.0;
  double energy_kwh = 0.0;
  int session_s = 0;  // plug-in until full (or run end)
  double avg_power_kw = 0.0;
  std::int64_t comm_exchanges = 0;
};

struct SimulationTrace {
  std::string scenario;
  int duration_s = 0;
  int period_s = 60;
  double s_rated_kva = 0.0;
  double secondary_base_v = 240.0;
  double substation_voltage_pu = 1.0;

  std::vector<double> feeder_s_kva;
  std::vector<double> feeder_p_kw;
  std::vector<double> feeder_q_kvar;
  std::vector<double> min_voltage_pu;  // over house buses
  std::vector<double> min_voltage_v;

  std::vector<BusId> watch_buses;
  std::vector<std::vector<double>> watch_v_pu;       // [watch][tick], solver-exact
  std::vector<std::vector<double>> watch_delta_rad;  // [watch][tick]

  std::vector<EvSummary> ev_summary;
  std::vector<std::vector<float>> ev_current_a;  // [ev][period]
  std::vector<std::vector<float>> ev_power_kw;
  std::vector<std::vector<float>> ev_soc_pct;

  // event log: per period, how many controller verdicts fired and how many
  // of them said congested
  std::vector<int> verdicts_per_period;
  std::vector<int> ce_verdicts_per_period;
  std::int64_t congested_seconds = 0;

  std::uint64_t trace_hash() const;
};

using ModelStore = std::unordered_map<BusId, NeuralNet>;

// Called after each solved tick; used by the training campaign to stream
// per-node features without retaining full per-bus series.
using TickObserver = std::function<void(int t_s, const PowerFlowSolution&)>;

SimulationTrace run_scenario(const ScenarioConfig& config, const NetworkTopology& topology,
                             const ProfileLibrary& library, const ModelStore* models = nullptr,
                             const TickObserver& observer = {});

// (V, delta) of a recorded bus at one tick, exactly as the solver produced
// them. The root reports (V0, 0) without needing to be recorded.
std::pair<double, double> measurement_view(const SimulationTrace& trace, const NetworkTopology& topology,
                                           BusId bus, int t_s);

// min(1, day/30) with day counted from 1, per the 3.33%-per-day ramp.
double campaign_penetration(int day);

struct CampaignPlan {
  int days = 30;
  std::uint64_t seed = 0;
  FleetConfig fleet;
  int window_len_s = 60;
  int k_intervals = 24;
  SolverOptions solver;
  std::vector<BusId> nodes;  // empty = every house-ev bus
};

// One windowed feature row of a node's local history plus its label.
using FeatureRowSink =
    std::function<void(BusId bus, const FeatureVector& averaged, double label_kva)>;

// 30 uncontrolled days with the penetration ramp min(1, day/30); emits one
// row per node per non-overlapping window.
void run_training_campaign(const CampaignPlan& plan, const NetworkTopology& topology,
                           const ProfileLibrary& library, const FeatureRowSink& sink);

// In-memory convenience for tests and single-node studies.
struct NodeRows {
  std::vector<FeatureVector> features;
  std::vector<double> labels_kva;
};
std::unordered_map<BusId, NodeRows> run_training_campaign_collect(const CampaignPlan& plan,
                                                                  const NetworkTopology& topology,
                                                                  const ProfileLibrary& library);

}  // namespace gridaimd
