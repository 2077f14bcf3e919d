#include "gridaimd/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "gridaimd/rng.hpp"

namespace gridaimd {

std::string to_string(ScenarioMode mode) {
  switch (mode) {
    case ScenarioMode::NoEv: return "NoEv";
    case ScenarioMode::NoControl: return "NoControl";
    case ScenarioMode::IdealAimd: return "IdealAimd";
    case ScenarioMode::ProposedAimd: return "ProposedAimd";
  }
  return "unknown";
}

namespace {

void hash_doubles(std::uint64_t& h, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    h = fnv1a(&bits, sizeof bits, h);
  }
}

struct EvRuntime {
  EvState state;
  std::size_t bus_index = 0;
  int period_offset = 0;
  bool ce_latch = false;
  double delivered_kw = 0.0;
  double energy_kwh = 0.0;
  int full_at_s = -1;
  std::unique_ptr<LocalEstimatorController> local;  // ProposedAimd only
};

}  // namespace

std::uint64_t SimulationTrace::trace_hash() const {
  std::uint64_t h = fnv1a(scenario);
  hash_doubles(h, feeder_s_kva);
  hash_doubles(h, feeder_p_kw);
  hash_doubles(h, feeder_q_kvar);
  hash_doubles(h, min_voltage_pu);
  for (const EvSummary& ev : ev_summary) {
    h = fnv1a(&ev.ev_id, sizeof ev.ev_id, h);
    h = fnv1a(&ev.bus, sizeof ev.bus, h);
    h = fnv1a(&ev.final_soc_pct, sizeof ev.final_soc_pct, h);
    h = fnv1a(&ev.energy_kwh, sizeof ev.energy_kwh, h);
    h = fnv1a(&ev.comm_exchanges, sizeof ev.comm_exchanges, h);
  }
  for (const auto& series : ev_current_a) {
    if (!series.empty()) h = fnv1a(series.data(), series.size() * sizeof(float), h);
  }
  return h;
}

SimulationTrace run_scenario(const ScenarioConfig& config, const NetworkTopology& topology,
                             const ProfileLibrary& library, const ModelStore* models,
                             const TickObserver& observer) {
  if (config.duration_s <= 0) throw std::invalid_argument("duration must be positive");
  if (config.profile_day < 0 || config.profile_day >= library.days()) {
    throw std::invalid_argument("profile day " + std::to_string(config.profile_day) +
                                " outside library");
  }

  FeederSolver solver(topology);
  const std::size_t n = solver.bus_count();
  const double rated = topology.substation_rating_kva();
  const double v0 = topology.substation_voltage_pu();

  // Houses: load bus h pairs with the h-th house-ev bus, both in id order.
  std::vector<BusId> load_buses = topology.buses_of_kind(BusKind::HouseLoad);
  std::vector<BusId> ev_buses = topology.buses_of_kind(BusKind::HouseEv);
  std::sort(load_buses.begin(), load_buses.end());
  std::sort(ev_buses.begin(), ev_buses.end());
  if (load_buses.size() != ev_buses.size() || load_buses.empty()) {
    throw std::invalid_argument("topology must pair one house-load bus with one house-ev bus");
  }
  const int houses = static_cast<int>(load_buses.size());

  std::vector<std::size_t> load_idx(load_buses.size());
  for (std::size_t i = 0; i < load_buses.size(); ++i) load_idx[i] = topology.bus_index(load_buses[i]);

  std::vector<std::size_t> house_idx;  // all house buses, for the min-voltage channel
  house_idx.reserve(load_buses.size() * 2);
  for (BusId b : load_buses) house_idx.push_back(topology.bus_index(b));
  for (BusId b : ev_buses) house_idx.push_back(topology.bus_index(b));

  // Fleet
  std::vector<EvRuntime> fleet;
  if (config.mode != ScenarioMode::NoEv && config.penetration > 0.0) {
    FleetConfig fc = config.fleet;
    fc.penetration = config.penetration;
    fc.rng_seed = Rng(config.seed).derive("fleet").next_u64();
    std::vector<EvState> spawned = spawn_fleet(fc, houses, ev_buses);
    fleet.reserve(spawned.size());
    Rng offset_rng = Rng(config.seed).derive("period-offset");
    for (EvState& ev : spawned) {
      EvRuntime rt;
      rt.state = ev;
      rt.bus_index = topology.bus_index(ev.bus);
      rt.period_offset = config.stagger_periods
                             ? static_cast<int>(offset_rng.below(
                                   static_cast<std::uint64_t>(config.aimd.period_s)))
                             : 0;
      if (config.mode == ScenarioMode::ProposedAimd) {
        if (!models) throw std::invalid_argument("ProposedAimd requires trained models");
        auto it = models->find(ev.bus);
        if (it == models->end()) {
          throw std::invalid_argument("no trained model for house-ev bus " + std::to_string(ev.bus));
        }
        rt.local = std::make_unique<LocalEstimatorController>(&it->second, config.aimd,
                                                              ev.charger_max_current_a,
                                                              rt.period_offset,
                                                              it->second.k_intervals());
      }
      fleet.push_back(std::move(rt));
    }
  }

  SimulationTrace trace;
  trace.scenario = to_string(config.mode);
  trace.duration_s = config.duration_s;
  trace.period_s = config.aimd.period_s;
  trace.s_rated_kva = rated;
  trace.secondary_base_v = topology.base_voltage_secondary_v();
  trace.substation_voltage_pu = v0;
  trace.feeder_s_kva.reserve(static_cast<std::size_t>(config.duration_s));
  trace.feeder_p_kw.reserve(static_cast<std::size_t>(config.duration_s));
  trace.feeder_q_kvar.reserve(static_cast<std::size_t>(config.duration_s));
  trace.min_voltage_pu.reserve(static_cast<std::size_t>(config.duration_s));
  trace.min_voltage_v.reserve(static_cast<std::size_t>(config.duration_s));

  trace.watch_buses = config.watch_buses;
  std::vector<std::size_t> watch_idx;
  for (BusId b : config.watch_buses) watch_idx.push_back(topology.bus_index(b));
  trace.watch_v_pu.assign(watch_idx.size(), {});
  trace.watch_delta_rad.assign(watch_idx.size(), {});

  int periods = (config.duration_s + config.aimd.period_s - 1) / config.aimd.period_s;
  trace.verdicts_per_period.assign(static_cast<std::size_t>(periods), 0);
  trace.ce_verdicts_per_period.assign(static_cast<std::size_t>(periods), 0);
  trace.ev_current_a.assign(fleet.size(), {});
  trace.ev_power_kw.assign(fleet.size(), {});
  trace.ev_soc_pct.assign(fleet.size(), {});
  for (auto& v : trace.ev_current_a) v.reserve(static_cast<std::size_t>(periods));
  for (auto& v : trace.ev_power_kw) v.reserve(static_cast<std::size_t>(periods));
  for (auto& v : trace.ev_soc_pct) v.reserve(static_cast<std::size_t>(periods));

  std::vector<double> p_dense(n), q_dense(n);
  std::vector<double> v_prev(n, v0);

  std::vector<const LoadProfile*> profiles(static_cast<std::size_t>(houses));
  for (int h = 0; h < houses; ++h) {
    profiles[static_cast<std::size_t>(h)] = &library.profile(h % library.households(), config.profile_day);
  }

  for (int t = 0; t < config.duration_s; ++t) {
    int tod = t % kSecondsPerDay;

    std::fill(p_dense.begin(), p_dense.end(), 0.0);
    std::fill(q_dense.begin(), q_dense.end(), 0.0);
    for (int h = 0; h < houses; ++h) {
      const LoadProfile& prof = *profiles[static_cast<std::size_t>(h)];
      p_dense[load_idx[static_cast<std::size_t>(h)]] = prof.p_kw[static_cast<std::size_t>(tod)];
      q_dense[load_idx[static_cast<std::size_t>(h)]] = prof.q_kvar[static_cast<std::size_t>(tod)];
    }

    for (EvRuntime& rt : fleet) {
      if (!rt.state.connected && tod >= rt.state.arrival_t_s) {
        rt.state.connected = true;
        rt.state.commanded_current_a =
            config.mode == ScenarioMode::NoControl ? rt.state.charger_max_current_a : 0.0;
      }
      auto [p, q] = charging_power(rt.state, v_prev[rt.bus_index], config.fleet.constant_power);
      rt.delivered_kw = p;
      p_dense[rt.bus_index] += p;
      q_dense[rt.bus_index] += q;
    }

    PowerFlowSolution sol = solver.solve_distflow_dense(p_dense, q_dense, config.solver, &v_prev);
    if (!sol.converged) {
      throw std::runtime_error("power flow failed at tick " + std::to_string(t) + ": " +
                               sol.diagnostic);
    }

    trace.feeder_s_kva.push_back(sol.feeder_s_kva);
    trace.feeder_p_kw.push_back(sol.feeder_p_kw);
    trace.feeder_q_kvar.push_back(sol.feeder_q_kvar);
    double vmin = v0;
    for (std::size_t i : house_idx) vmin = std::min(vmin, sol.voltage_mag_pu[i]);
    trace.min_voltage_pu.push_back(vmin);
    trace.min_voltage_v.push_back(vmin * topology.base_voltage_secondary_v());

    for (std::size_t w = 0; w < watch_idx.size(); ++w) {
      trace.watch_v_pu[w].push_back(sol.voltage_mag_pu[watch_idx[w]]);
      trace.watch_delta_rad[w].push_back(sol.phase_angle_rad[watch_idx[w]]);
    }

    bool congested_now = sol.feeder_s_kva >= rated;
    if (congested_now) ++trace.congested_seconds;

    for (EvRuntime& rt : fleet) {
      if (!rt.state.connected) continue;

      // battery update with this tick's delivered power
      rt.state = step_charge(rt.state, rt.delivered_kw, 1.0);
      rt.energy_kwh += rt.delivered_kw / 3600.0;
      if (rt.state.soc_pct >= 100.0 && rt.full_at_s < 0) rt.full_at_s = t;

      if (config.mode == ScenarioMode::IdealAimd) {
        rt.ce_latch = rt.ce_latch || congested_now;
        bool boundary = ((t + 1 - rt.period_offset) % config.aimd.period_s) == 0;
        if (boundary) {
          bool congested = config.latch_ce ? rt.ce_latch : congested_now;
          CongestionVerdict verdict{congested, VerdictSource::IdealBroadcast, std::nullopt};
          rt.state.commanded_current_a =
              aimd_step(rt.state.commanded_current_a, verdict, sol.voltage_mag_pu[rt.bus_index],
                        config.aimd, rt.state.charger_max_current_a);
          rt.ce_latch = false;
          auto period_index = static_cast<std::size_t>(t / config.aimd.period_s);
          ++trace.verdicts_per_period[period_index];
          if (congested) ++trace.ce_verdicts_per_period[period_index];
        }
      } else if (config.mode == ScenarioMode::ProposedAimd) {
        std::int64_t decisions_before = rt.local->decision_count();
        rt.state.commanded_current_a = rt.local->on_measurement(
            t, sol.voltage_mag_pu[rt.bus_index], sol.phase_angle_rad[rt.bus_index], rated);
        if (rt.local->decision_count() > decisions_before) {
          auto period_index = static_cast<std::size_t>(t / config.aimd.period_s);
          ++trace.verdicts_per_period[period_index];
          if (rt.local->last_estimate_kva() >= rated - config.aimd.epsilon_kva) {
            ++trace.ce_verdicts_per_period[period_index];
          }
        }
      }
    }

    if ((t + 1) % config.aimd.period_s == 0 || t + 1 == config.duration_s) {
      for (std::size_t e = 0; e < fleet.size(); ++e) {
        const EvRuntime& rt = fleet[e];
        trace.ev_current_a[e].push_back(static_cast<float>(rt.state.commanded_current_a));
        trace.ev_power_kw[e].push_back(static_cast<float>(rt.delivered_kw));
        trace.ev_soc_pct[e].push_back(static_cast<float>(rt.state.soc_pct));
      }
    }

    if (observer) observer(t, sol);
    v_prev = std::move(sol.voltage_mag_pu);
  }

  trace.ev_summary.reserve(fleet.size());
  for (const EvRuntime& rt : fleet) {
    EvSummary s;
    s.ev_id = rt.state.id;
    s.bus = rt.state.bus;
    s.arrival_t_s = rt.state.arrival_t_s;
    s.initial_soc_pct = rt.state.initial_soc_pct;
    s.final_soc_pct = rt.state.soc_pct;
    s.energy_kwh = rt.energy_kwh;
    int session_end = rt.full_at_s >= 0 ? rt.full_at_s + 1 : config.duration_s;
    s.session_s = std::max(1, session_end - rt.state.arrival_t_s);
    s.avg_power_kw = rt.energy_kwh / (static_cast<double>(s.session_s) / 3600.0);
    switch (config.mode) {
      case ScenarioMode::IdealAimd: s.comm_exchanges = config.duration_s; break;
      case ScenarioMode::ProposedAimd: s.comm_exchanges = rt.local->comm_exchanges(); break;
      default: s.comm_exchanges = 0; break;
    }
    trace.ev_summary.push_back(s);
  }
  return trace;
}

std::pair<double, double> measurement_view(const SimulationTrace& trace,
                                           const NetworkTopology& topology, BusId bus, int t_s) {
  if (t_s < 0 || t_s >= trace.duration_s) {
    throw std::out_of_range("tick " + std::to_string(t_s) + " outside the run");
  }
  if (bus == topology.root()) return {trace.substation_voltage_pu, 0.0};
  for (std::size_t w = 0; w < trace.watch_buses.size(); ++w) {
    if (trace.watch_buses[w] == bus) {
      return {trace.watch_v_pu[w][static_cast<std::size_t>(t_s)],
              trace.watch_delta_rad[w][static_cast<std::size_t>(t_s)]};
    }
  }
  throw std::out_of_range("bus " + std::to_string(bus) + " was not recorded in this trace");
}

double campaign_penetration(int day) {
  if (day < 1) throw std::invalid_argument("campaign days are counted from 1");
  return std::min(1.0, static_cast<double>(day) / 30.0);
}

void run_training_campaign(const CampaignPlan& plan, const NetworkTopology& topology,
                           const ProfileLibrary& library, const FeatureRowSink& sink) {
  if (plan.days <= 0) throw std::invalid_argument("campaign needs at least one day");
  if (library.days() < plan.days) {
    throw std::invalid_argument("profile library has " + std::to_string(library.days()) +
                                " days, campaign needs " + std::to_string(plan.days));
  }

  std::vector<BusId> nodes = plan.nodes;
  if (nodes.empty()) {
    nodes = topology.buses_of_kind(BusKind::HouseEv);
    std::sort(nodes.begin(), nodes.end());
  }
  std::vector<std::size_t> node_idx;
  node_idx.reserve(nodes.size());
  for (BusId b : nodes) node_idx.push_back(topology.bus_index(b));

  const int wl = plan.window_len_s;
  std::vector<double> sum_v(nodes.size()), sum_v_sq(nodes.size()), sum_delta(nodes.size());
  double sum_s = 0.0;
  int samples = 0;

  for (int day = 1; day <= plan.days; ++day) {
    ScenarioConfig cfg;
    cfg.mode = ScenarioMode::NoControl;
    cfg.duration_s = kSecondsPerDay;
    cfg.seed = Rng(plan.seed).derive("campaign-day", static_cast<std::uint64_t>(day)).next_u64();
    cfg.penetration = campaign_penetration(day);
    cfg.profile_day = day - 1;
    cfg.fleet = plan.fleet;
    cfg.solver = plan.solver;

    std::fill(sum_v.begin(), sum_v.end(), 0.0);
    std::fill(sum_v_sq.begin(), sum_v_sq.end(), 0.0);
    std::fill(sum_delta.begin(), sum_delta.end(), 0.0);
    sum_s = 0.0;
    samples = 0;

    TickObserver observer = [&](int t, const PowerFlowSolution& sol) {
      for (std::size_t i = 0; i < node_idx.size(); ++i) {
        double v = sol.voltage_mag_pu[node_idx[i]];
        sum_v[i] += v;
        sum_v_sq[i] += v * v;
        sum_delta[i] += sol.phase_angle_rad[node_idx[i]];
      }
      sum_s += sol.feeder_s_kva;
      ++samples;
      if (samples == wl) {
        int end_t = t % kSecondsPerDay + 1;
        double tk = time_interval(end_t, plan.k_intervals);
        double label = sum_s / wl;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
          FeatureVector row{sum_v[i] / wl, sum_v_sq[i] / wl, sum_delta[i] / wl, tk};
          sink(nodes[i], row, label);
        }
        std::fill(sum_v.begin(), sum_v.end(), 0.0);
        std::fill(sum_v_sq.begin(), sum_v_sq.end(), 0.0);
        std::fill(sum_delta.begin(), sum_delta.end(), 0.0);
        sum_s = 0.0;
        samples = 0;
      }
    };

    run_scenario(cfg, topology, library, nullptr, observer);
    library.release_day(cfg.profile_day);
  }
}

std::unordered_map<BusId, NodeRows> run_training_campaign_collect(const CampaignPlan& plan,
                                                                  const NetworkTopology& topology,
                                                                  const ProfileLibrary& library) {
  std::unordered_map<BusId, NodeRows> out;
  run_training_campaign(plan, topology, library,
                        [&](BusId bus, const FeatureVector& row, double label) {
                          NodeRows& rows = out[bus];
                          rows.features.push_back(row);
                          rows.labels_kva.push_back(label);
                        });
  return out;
}

}  // namespace gridaimd
