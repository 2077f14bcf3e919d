#include "gridaimd/harness.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "gridaimd/rng.hpp"

namespace gridaimd {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

bool verbose_output() {
  const char* env = std::getenv("GRIDAIMD_VERBOSE");
  return env && env[0] != '\0' && env[0] != '0';
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

ordered_json parse_json(const std::string& text, const std::string& origin) {
  try {
    return ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::runtime_error(origin + ": invalid JSON: " + e.what());
  }
}

ScenarioMode mode_from_string(const std::string& s, const std::string& origin) {
  if (s == "NoEv") return ScenarioMode::NoEv;
  if (s == "NoControl") return ScenarioMode::NoControl;
  if (s == "IdealAimd") return ScenarioMode::IdealAimd;
  if (s == "ProposedAimd") return ScenarioMode::ProposedAimd;
  throw std::runtime_error(origin + ": unknown mode '" + s +
                           "' (expected NoEv|NoControl|IdealAimd|ProposedAimd)");
}

SynthParams synth_params_from(const ordered_json& j) {
  SynthParams p;
  p.base_kw_min = j.value("base_kw_min", p.base_kw_min);
  p.base_kw_max = j.value("base_kw_max", p.base_kw_max);
  p.evening_amp_kw_min = j.value("evening_amp_kw_min", p.evening_amp_kw_min);
  p.evening_amp_kw_max = j.value("evening_amp_kw_max", p.evening_amp_kw_max);
  p.morning_frac_min = j.value("morning_frac_min", p.morning_frac_min);
  p.morning_frac_max = j.value("morning_frac_max", p.morning_frac_max);
  p.evening_peak_h_mean = j.value("evening_peak_h_mean", p.evening_peak_h_mean);
  p.evening_peak_h_sd = j.value("evening_peak_h_sd", p.evening_peak_h_sd);
  p.morning_peak_h_mean = j.value("morning_peak_h_mean", p.morning_peak_h_mean);
  p.morning_peak_h_sd = j.value("morning_peak_h_sd", p.morning_peak_h_sd);
  p.evening_width_h_min = j.value("evening_width_h_min", p.evening_width_h_min);
  p.evening_width_h_max = j.value("evening_width_h_max", p.evening_width_h_max);
  p.morning_width_h_min = j.value("morning_width_h_min", p.morning_width_h_min);
  p.morning_width_h_max = j.value("morning_width_h_max", p.morning_width_h_max);
  p.day_scale_min = j.value("day_scale_min", p.day_scale_min);
  p.day_scale_max = j.value("day_scale_max", p.day_scale_max);
  p.pulses_per_day = j.value("pulses_per_day", p.pulses_per_day);
  p.pulse_kw_min = j.value("pulse_kw_min", p.pulse_kw_min);
  p.pulse_kw_max = j.value("pulse_kw_max", p.pulse_kw_max);
  p.pulse_dur_s_min = j.value("pulse_dur_s_min", p.pulse_dur_s_min);
  p.pulse_dur_s_max = j.value("pulse_dur_s_max", p.pulse_dur_s_max);
  p.jitter_kw = j.value("jitter_kw", p.jitter_kw);
  p.pf_min = j.value("pf_min", p.pf_min);
  p.pf_max = j.value("pf_max", p.pf_max);
  return p;
}

ordered_json synth_params_to(const SynthParams& p) {
  return ordered_json{{"base_kw_min", p.base_kw_min},
                      {"base_kw_max", p.base_kw_max},
                      {"evening_amp_kw_min", p.evening_amp_kw_min},
                      {"evening_amp_kw_max", p.evening_amp_kw_max},
                      {"morning_frac_min", p.morning_frac_min},
                      {"morning_frac_max", p.morning_frac_max},
                      {"evening_peak_h_mean", p.evening_peak_h_mean},
                      {"evening_peak_h_sd", p.evening_peak_h_sd},
                      {"morning_peak_h_mean", p.morning_peak_h_mean},
                      {"morning_peak_h_sd", p.morning_peak_h_sd},
                      {"evening_width_h_min", p.evening_width_h_min},
                      {"evening_width_h_max", p.evening_width_h_max},
                      {"morning_width_h_min", p.morning_width_h_min},
                      {"morning_width_h_max", p.morning_width_h_max},
                      {"day_scale_min", p.day_scale_min},
                      {"day_scale_max", p.day_scale_max},
                      {"pulses_per_day", p.pulses_per_day},
                      {"pulse_kw_min", p.pulse_kw_min},
                      {"pulse_kw_max", p.pulse_kw_max},
                      {"pulse_dur_s_min", p.pulse_dur_s_min},
                      {"pulse_dur_s_max", p.pulse_dur_s_max},
                      {"jitter_kw", p.jitter_kw},
                      {"pf_min", p.pf_min},
                      {"pf_max", p.pf_max}};
}

ProfilesSpec profiles_from(const ordered_json& j, const std::string& origin) {
  ProfilesSpec spec;
  std::string source = j.value("source", std::string("synth"));
  if (source == "synth") {
    spec.source = ProfilesSpec::Source::Synth;
    spec.households = j.value("households", spec.households);
    spec.days = j.value("days", spec.days);
    if (j.contains("seed")) {
      spec.seed = j.at("seed").get<std::uint64_t>();
      spec.seed_given = true;
    }
    if (j.contains("params")) spec.params = synth_params_from(j.at("params"));
  } else if (source == "csv") {
    spec.source = ProfilesSpec::Source::Csv;
    if (!j.contains("path")) throw std::runtime_error(origin + ": csv profiles need a 'path'");
    spec.csv_path = j.at("path").get<std::string>();
  } else {
    throw std::runtime_error(origin + ": unknown profiles source '" + source + "'");
  }
  return spec;
}

ordered_json profiles_to(const ProfilesSpec& spec) {
  if (spec.source == ProfilesSpec::Source::Csv) {
    return ordered_json{{"source", "csv"}, {"path", spec.csv_path}};
  }
  ordered_json j{{"source", "synth"},
                 {"households", spec.households},
                 {"days", spec.days},
                 {"params", synth_params_to(spec.params)}};
  if (spec.seed_given) j["seed"] = spec.seed;
  return j;
}

FleetConfig fleet_from(const ordered_json& j) {
  FleetConfig f;
  f.battery_kwh_min = j.value("battery_kwh_min", f.battery_kwh_min);
  f.battery_kwh_max = j.value("battery_kwh_max", f.battery_kwh_max);
  f.arrival_min_s = j.value("arrival_min_s", f.arrival_min_s);
  f.arrival_max_s = j.value("arrival_max_s", f.arrival_max_s);
  f.initial_soc_min_pct = j.value("initial_soc_min_pct", f.initial_soc_min_pct);
  f.initial_soc_max_pct = j.value("initial_soc_max_pct", f.initial_soc_max_pct);
  f.charger_max_current_a = j.value("charger_max_current_a", f.charger_max_current_a);
  f.charger_voltage_base_v = j.value("charger_voltage_base_v", f.charger_voltage_base_v);
  f.constant_power = j.value("constant_power", f.constant_power);
  return f;
}

ordered_json fleet_to(const FleetConfig& f) {
  return ordered_json{{"battery_kwh_min", f.battery_kwh_min},
                      {"battery_kwh_max", f.battery_kwh_max},
                      {"arrival_min_s", f.arrival_min_s},
                      {"arrival_max_s", f.arrival_max_s},
                      {"initial_soc_min_pct", f.initial_soc_min_pct},
                      {"initial_soc_max_pct", f.initial_soc_max_pct},
                      {"charger_max_current_a", f.charger_max_current_a},
                      {"charger_voltage_base_v", f.charger_voltage_base_v},
                      {"constant_power", f.constant_power}};
}

AimdParams aimd_from(const ordered_json& j) {
  AimdParams a;
  a.alpha_a = j.value("alpha_a", a.alpha_a);
  a.beta = j.value("beta", a.beta);
  a.v_min_pu = j.value("v_min_pu", a.v_min_pu);
  a.period_s = j.value("period_s", a.period_s);
  a.epsilon_kva = j.value("epsilon_kva", a.epsilon_kva);
  return a;
}

ordered_json aimd_to(const AimdParams& a) {
  return ordered_json{{"alpha_a", a.alpha_a},
                      {"beta", a.beta},
                      {"v_min_pu", a.v_min_pu},
                      {"period_s", a.period_s},
                      {"epsilon_kva", a.epsilon_kva}};
}

SolverOptions solver_from(const ordered_json& j) {
  SolverOptions s;
  s.tolerance_pu = j.value("tolerance_pu", s.tolerance_pu);
  s.max_iter = j.value("max_iter", s.max_iter);
  return s;
}

ordered_json solver_to(const SolverOptions& s) {
  return ordered_json{{"tolerance_pu", s.tolerance_pu}, {"max_iter", s.max_iter}};
}

EstimatorConfig estimator_from(const ordered_json& j) {
  EstimatorConfig c;
  c.k_intervals = j.value("k_intervals", c.k_intervals);
  c.window_len = j.value("window_len", c.window_len);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.seed = j.value("seed", c.seed);
  c.max_rows = j.value("max_rows", c.max_rows);
  c.focus_label_kva = j.value("focus_label_kva", c.focus_label_kva);
  c.focus_halfwidth_kva = j.value("focus_halfwidth_kva", c.focus_halfwidth_kva);
  return c;
}

ordered_json estimator_to(const EstimatorConfig& c) {
  return ordered_json{{"k_intervals", c.k_intervals},
                      {"window_len", c.window_len},
                      {"learning_rate", c.learning_rate},
                      {"momentum", c.momentum},
                      {"batch_size", c.batch_size},
                      {"epochs", c.epochs},
                      {"validation_fraction", c.validation_fraction},
                      {"seed", c.seed},
                      {"max_rows", c.max_rows},
                      {"focus_label_kva", c.focus_label_kva},
                      {"focus_halfwidth_kva", c.focus_halfwidth_kva}};
}

}  // namespace

GridConfig grid_config_from_json(const std::string& text, const std::string& origin) {
  ordered_json j = parse_json(text, origin);
  GridConfig g;
  g.neighborhoods = j.value("neighborhoods", g.neighborhoods);
  g.transformers_per_neighborhood =
      j.value("transformers_per_neighborhood", g.transformers_per_neighborhood);
  g.houses_per_inner_node = j.value("houses_per_inner_node", g.houses_per_inner_node);
  g.substation_rating_kva = j.value("substation_rating_kva", g.substation_rating_kva);
  g.primary_voltage_v = j.value("primary_voltage_v", g.primary_voltage_v);
  g.secondary_voltage_v = j.value("secondary_voltage_v", g.secondary_voltage_v);
  g.substation_voltage_pu = j.value("substation_voltage_pu", g.substation_voltage_pu);
  g.primary_impedance_scale = j.value("primary_impedance_scale", g.primary_impedance_scale);
  g.transformer_r_ohm = j.value("transformer_r_ohm", g.transformer_r_ohm);
  g.transformer_x_ohm = j.value("transformer_x_ohm", g.transformer_x_ohm);
  g.transformer_rating_kva = j.value("transformer_rating_kva", g.transformer_rating_kva);
  g.service_drop_r_ohm = j.value("service_drop_r_ohm", g.service_drop_r_ohm);
  g.service_drop_x_ohm = j.value("service_drop_x_ohm", g.service_drop_x_ohm);
  return g;
}

std::string grid_config_to_json(const GridConfig& g) {
  ordered_json j{{"neighborhoods", g.neighborhoods},
                 {"transformers_per_neighborhood", g.transformers_per_neighborhood},
                 {"houses_per_inner_node", g.houses_per_inner_node},
                 {"substation_rating_kva", g.substation_rating_kva},
                 {"primary_voltage_v", g.primary_voltage_v},
                 {"secondary_voltage_v", g.secondary_voltage_v},
                 {"substation_voltage_pu", g.substation_voltage_pu},
                 {"primary_impedance_scale", g.primary_impedance_scale},
                 {"transformer_r_ohm", g.transformer_r_ohm},
                 {"transformer_x_ohm", g.transformer_x_ohm},
                 {"transformer_rating_kva", g.transformer_rating_kva},
                 {"service_drop_r_ohm", g.service_drop_r_ohm},
                 {"service_drop_x_ohm", g.service_drop_x_ohm}};
  return j.dump(2) + "\n";
}

GridConfig load_grid_config(const std::string& path) {
  return grid_config_from_json(read_file(path), path);
}

ScenarioFile scenario_from_json(const std::string& text, const std::string& origin) {
  ordered_json j = parse_json(text, origin);
  ScenarioFile sf;
  if (!j.contains("topology")) throw std::runtime_error(origin + ": missing 'topology' path");
  sf.topology_path = j.at("topology").get<std::string>();
  sf.engine.mode = mode_from_string(j.value("mode", std::string("NoControl")), origin);
  sf.engine.duration_s = j.value("duration_s", sf.engine.duration_s);
  sf.engine.seed = j.value("seed", sf.engine.seed);
  sf.engine.penetration = j.value("penetration", sf.engine.penetration);
  sf.engine.profile_day = j.value("profile_day", sf.engine.profile_day);
  if (j.contains("fleet")) sf.engine.fleet = fleet_from(j.at("fleet"));
  if (j.contains("aimd")) sf.engine.aimd = aimd_from(j.at("aimd"));
  sf.engine.stagger_periods = j.value("stagger_periods", sf.engine.stagger_periods);
  sf.engine.latch_ce = j.value("latch_ce", sf.engine.latch_ce);
  if (j.contains("solver")) sf.engine.solver = solver_from(j.at("solver"));
  if (j.contains("watch_buses")) {
    for (const auto& b : j.at("watch_buses")) sf.engine.watch_buses.push_back(b.get<BusId>());
  }
  if (j.contains("profiles")) sf.profiles = profiles_from(j.at("profiles"), origin);
  sf.models_dir = j.value("models_dir", std::string());
  return sf;
}

std::string scenario_to_json(const ScenarioFile& sf) {
  ordered_json j{{"mode", to_string(sf.engine.mode)},
                 {"seed", sf.engine.seed},
                 {"duration_s", sf.engine.duration_s},
                 {"penetration", sf.engine.penetration},
                 {"profile_day", sf.engine.profile_day},
                 {"topology", sf.topology_path},
                 {"profiles", profiles_to(sf.profiles)},
                 {"fleet", fleet_to(sf.engine.fleet)},
                 {"aimd", aimd_to(sf.engine.aimd)},
                 {"stagger_periods", sf.engine.stagger_periods},
                 {"latch_ce", sf.engine.latch_ce},
                 {"solver", solver_to(sf.engine.solver)},
                 {"watch_buses", sf.engine.watch_buses},
                 {"models_dir", sf.models_dir}};
  return j.dump(2) + "\n";
}

ScenarioFile load_scenario_file(const std::string& path) {
  return scenario_from_json(read_file(path), path);
}

CampaignFile campaign_from_json(const std::string& text, const std::string& origin) {
  ordered_json j = parse_json(text, origin);
  CampaignFile cf;
  if (!j.contains("topology")) throw std::runtime_error(origin + ": missing 'topology' path");
  cf.topology_path = j.at("topology").get<std::string>();
  cf.plan.days = j.value("days", cf.plan.days);
  cf.plan.seed = j.value("seed", cf.plan.seed);
  if (j.contains("fleet")) cf.plan.fleet = fleet_from(j.at("fleet"));
  cf.plan.window_len_s = j.value("window_len_s", cf.plan.window_len_s);
  cf.plan.k_intervals = j.value("k_intervals", cf.plan.k_intervals);
  if (j.contains("solver")) cf.plan.solver = solver_from(j.at("solver"));
  if (j.contains("nodes")) {
    for (const auto& b : j.at("nodes")) cf.plan.nodes.push_back(b.get<BusId>());
  }
  if (j.contains("profiles")) cf.profiles = profiles_from(j.at("profiles"), origin);
  return cf;
}

std::string campaign_to_json(const CampaignFile& cf) {
  ordered_json j{{"seed", cf.plan.seed},
                 {"days", cf.plan.days},
                 {"topology", cf.topology_path},
                 {"profiles", profiles_to(cf.profiles)},
                 {"fleet", fleet_to(cf.plan.fleet)},
                 {"window_len_s", cf.plan.window_len_s},
                 {"k_intervals", cf.plan.k_intervals},
                 {"solver", solver_to(cf.plan.solver)},
                 {"nodes", cf.plan.nodes}};
  return j.dump(2) + "\n";
}

CampaignFile load_campaign_file(const std::string& path) {
  return campaign_from_json(read_file(path), path);
}

TrainInvocation train_from_json(const std::string& text, const std::string& origin) {
  ordered_json j = parse_json(text, origin);
  TrainInvocation ti;
  if (!j.contains("history_dir")) throw std::runtime_error(origin + ": missing 'history_dir'");
  ti.history_dir = j.at("history_dir").get<std::string>();
  ti.out_dir = j.value("out_dir", std::string());
  if (j.contains("buses")) {
    for (const auto& b : j.at("buses")) ti.buses.push_back(b.get<BusId>());
  }
  ti.shared_model = j.value("shared_model", false);
  if (j.contains("estimator")) ti.config = estimator_from(j.at("estimator"));
  ti.jobs = j.value("jobs", 0);
  return ti;
}

std::string train_to_json(const TrainInvocation& ti) {
  ordered_json j{{"history_dir", ti.history_dir},
                 {"out_dir", ti.out_dir},
                 {"buses", ti.buses},
                 {"shared_model", ti.shared_model},
                 {"estimator", estimator_to(ti.config)},
                 {"jobs", ti.jobs}};
  return j.dump(2) + "\n";
}

ProfileLibrary open_profiles(const ProfilesSpec& spec, std::uint64_t run_seed) {
  if (spec.source == ProfilesSpec::Source::Csv) return load_profiles_csv(spec.csv_path);
  std::uint64_t seed = spec.seed_given ? spec.seed : Rng(run_seed).derive("profiles").next_u64();
  return synthesize_library(seed, spec.households, spec.days, spec.params);
}

std::string file_digest_hex(const std::string& path) {
  return hex64(fnv1a(read_file(path)));
}

void write_manifest(const RunManifest& m, const std::string& dir) {
  ordered_json inputs = ordered_json::array();
  for (const ManifestInput& in : m.inputs) {
    inputs.push_back(ordered_json{{"name", in.name}, {"path", in.path}, {"fnv64", in.fnv64_hex}});
  }
  ordered_json j{{"command", m.command},
                 {"artifact_version", m.artifact_version},
                 {"seed", m.seed},
                 {"config_hash", m.config_hash_hex},
                 {"config", ordered_json::parse(m.config_text)},
                 {"inputs", inputs},
                 {"outputs", m.outputs},
                 {"wall_clock_s", m.wall_clock_s},
                 {"trace_hash", m.trace_hash_hex}};
  write_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

RunManifest read_manifest(const std::string& path) {
  ordered_json j = parse_json(read_file(path), path);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.artifact_version = j.value("artifact_version", std::string());
  m.seed = j.value("seed", std::uint64_t{0});
  m.config_hash_hex = j.value("config_hash", std::string());
  m.config_text = j.at("config").dump(2) + "\n";
  if (j.contains("inputs")) {
    for (const auto& in : j.at("inputs")) {
      m.inputs.push_back({in.at("name").get<std::string>(), in.at("path").get<std::string>(),
                          in.at("fnv64").get<std::string>()});
    }
  }
  if (j.contains("outputs")) {
    for (const auto& o : j.at("outputs")) m.outputs.push_back(o.get<std::string>());
  }
  m.wall_clock_s = j.value("wall_clock_s", 0.0);
  m.trace_hash_hex = j.value("trace_hash", std::string());
  return m;
}

void write_trace_csvs(const SimulationTrace& trace, const std::string& dir,
                      std::vector<std::string>& written) {
  char buf[512];
  {
    std::ofstream out(fs::path(dir) / "feeder.csv", std::ios::binary);
    out << "t_s,s_kva,p_kw,q_kvar\n";
    for (std::size_t t = 0; t < trace.feeder_s_kva.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", t, trace.feeder_s_kva[t],
                    trace.feeder_p_kw[t], trace.feeder_q_kvar[t]);
      out << buf;
    }
    written.push_back("feeder.csv");
  }
  {
    std::ofstream out(fs::path(dir) / "min_voltage.csv", std::ios::binary);
    out << "t_s,v_pu,v_volts\n";
    for (std::size_t t = 0; t < trace.min_voltage_pu.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, trace.min_voltage_pu[t],
                    trace.min_voltage_v[t]);
      out << buf;
    }
    written.push_back("min_voltage.csv");
  }
  {
    std::ofstream out(fs::path(dir) / "ev_summary.csv", std::ios::binary);
    out << "ev_id,bus,arrival_t_s,initial_soc_pct,final_soc_pct,energy_kwh,session_s,avg_power_kw,"
           "comm_exchanges\n";
    for (const EvSummary& ev : trace.ev_summary) {
      std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g,%.17g,%d,%.17g,%lld\n", ev.ev_id, ev.bus,
                    ev.arrival_t_s, ev.initial_soc_pct, ev.final_soc_pct, ev.energy_kwh,
                    ev.session_s, ev.avg_power_kw, static_cast<long long>(ev.comm_exchanges));
      out << buf;
    }
    written.push_back("ev_summary.csv");
  }
  {
    std::ofstream out(fs::path(dir) / "ev_periods.csv", std::ios::binary);
    out << "period,ev_id,current_a,power_kw,soc_pct\n";
    for (std::size_t e = 0; e < trace.ev_current_a.size(); ++e) {
      for (std::size_t p = 0; p < trace.ev_current_a[e].size(); ++p) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.9g,%.9g,%.9g\n", p, trace.ev_summary[e].ev_id,
                      static_cast<double>(trace.ev_current_a[e][p]),
                      static_cast<double>(trace.ev_power_kw[e][p]),
                      static_cast<double>(trace.ev_soc_pct[e][p]));
        out << buf;
      }
    }
    written.push_back("ev_periods.csv");
  }
  if (!trace.watch_buses.empty()) {
    std::ofstream out(fs::path(dir) / "watch.csv", std::ios::binary);
    out << "t_s,bus,v_pu,delta_rad\n";
    for (std::size_t w = 0; w < trace.watch_buses.size(); ++w) {
      for (std::size_t t = 0; t < trace.watch_v_pu[w].size(); ++t) {
        std::snprintf(buf, sizeof buf, "%zu,%d,%.9g,%.9g\n", t, trace.watch_buses[w],
                      static_cast<double>(trace.watch_v_pu[w][t]),
                      static_cast<double>(trace.watch_delta_rad[w][t]));
        out << buf;
      }
    }
    written.push_back("watch.csv");
  }
  if (!trace.verdicts_per_period.empty()) {
    std::ofstream out(fs::path(dir) / "events.csv", std::ios::binary);
    out << "period,verdicts,ce_verdicts\n";
    for (std::size_t pd = 0; pd < trace.verdicts_per_period.size(); ++pd) {
      out << pd << "," << trace.verdicts_per_period[pd] << "," << trace.ce_verdicts_per_period[pd]
          << "\n";
    }
    written.push_back("events.csv");
  }
  {
    std::ofstream out(fs::path(dir) / "trace_meta.csv", std::ios::binary);
    out << "key,value\n";
    out << "scenario," << trace.scenario << "\n";
    out << "duration_s," << trace.duration_s << "\n";
    out << "period_s," << trace.period_s << "\n";
    std::snprintf(buf, sizeof buf, "s_rated_kva,%.17g\n", trace.s_rated_kva);
    out << buf;
    std::snprintf(buf, sizeof buf, "secondary_base_v,%.17g\n", trace.secondary_base_v);
    out << buf;
    out << "congested_seconds," << trace.congested_seconds << "\n";
    out << "trace_hash," << hex64(trace.trace_hash()) << "\n";
    written.push_back("trace_meta.csv");
  }
}

std::vector<double> read_feeder_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> s;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double t, sv, p, q;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t, &sv, &p, &q) != 4) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    s.push_back(sv);
  }
  return s;
}

std::vector<EvSummary> read_ev_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  std::getline(in, line);
  std::vector<EvSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EvSummary ev;
    long long comm;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf,%lf,%d,%lf,%lld", &ev.ev_id, &ev.bus,
                    &ev.arrival_t_s, &ev.initial_soc_pct, &ev.final_soc_pct, &ev.energy_kwh,
                    &ev.session_s, &ev.avg_power_kw, &comm) != 9) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    ev.comm_exchanges = comm;
    out.push_back(ev);
  }
  return out;
}

Scorecard scorecard_from_files(const std::string& dir, const std::string& scenario_label) {
  SimulationTrace t;
  t.scenario = scenario_label;
  t.feeder_s_kva = read_feeder_csv((fs::path(dir) / "feeder.csv").string());
  t.ev_summary = read_ev_summary_csv((fs::path(dir) / "ev_summary.csv").string());

  // trace_meta carries the rating and label
  std::ifstream meta(fs::path(dir) / "trace_meta.csv");
  if (!meta) throw std::runtime_error("cannot open " + dir + "/trace_meta.csv");
  std::string line;
  std::getline(meta, line);
  while (std::getline(meta, line)) {
    auto comma = line.find(',');
    if (comma == std::string::npos) continue;
    std::string key = line.substr(0, comma);
    std::string value = line.substr(comma + 1);
    if (key == "s_rated_kva") t.s_rated_kva = std::stod(value);
    if (key == "scenario" && scenario_label.empty()) t.scenario = value;
  }
  t.duration_s = static_cast<int>(t.feeder_s_kva.size());
  return scorecard_from_trace(t);
}

void pipeline_build_grid(const GridConfig& config, const std::string& out_path) {
  NetworkTopology topology = build_paper_grid(config);
  if (auto violation = validate_radial(topology)) {
    throw std::runtime_error("built topology violates '" + violation->invariant +
                             "': " + violation->detail);
  }
  if (auto parent = fs::path(out_path).parent_path(); !parent.empty()) fs::create_directories(parent);
  save_topology(topology, out_path);
}

void pipeline_synth_profiles(const ProfilesSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  ProfileLibrary lib = open_profiles(spec, spec.seed);
  auto t0 = std::chrono::steady_clock::now();
  write_profiles_csv(lib, (fs::path(out_dir) / "profiles.csv").string());

  RunManifest m;
  m.command = "synth-profiles";
  m.artifact_version = kArtifactVersion;
  m.seed = spec.seed;
  ordered_json cfg{{"seed", spec.seed},
                   {"households", spec.households},
                   {"days", spec.days},
                   {"params", synth_params_to(spec.params)}};
  m.config_text = cfg.dump(2) + "\n";
  m.config_hash_hex = hex64(fnv1a(m.config_text));
  m.outputs = {"profiles.csv"};
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(m, out_dir);
}

SimulationTrace pipeline_simulate(const ScenarioFile& sf, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  NetworkTopology topology = load_topology(sf.topology_path);
  ProfileLibrary library = open_profiles(sf.profiles, sf.engine.seed);

  ModelStore models;
  const ModelStore* models_ptr = nullptr;
  if (sf.engine.mode == ScenarioMode::ProposedAimd) {
    if (sf.models_dir.empty()) {
      throw std::runtime_error("ProposedAimd scenario needs 'models_dir'");
    }
    models = load_models(sf.models_dir);
    // shared-model fallback for buses without a dedicated file
    fs::path shared = fs::path(sf.models_dir) / "shared.model";
    if (fs::exists(shared)) {
      NeuralNet shared_net = NeuralNet::load(shared.string());
      for (BusId b : topology.buses_of_kind(BusKind::HouseEv)) {
        if (!models.count(b)) models.emplace(b, shared_net);
      }
    }
    models_ptr = &models;
  }

  SimulationTrace trace = run_scenario(sf.engine, topology, library, models_ptr);

  RunManifest m;
  m.command = "simulate";
  m.artifact_version = kArtifactVersion;
  m.seed = sf.engine.seed;
  m.config_text = scenario_to_json(sf);
  m.config_hash_hex = hex64(fnv1a(m.config_text));
  m.inputs.push_back({"topology", sf.topology_path, file_digest_hex(sf.topology_path)});
  if (sf.profiles.source == ProfilesSpec::Source::Csv) {
    m.inputs.push_back({"profiles", sf.profiles.csv_path, file_digest_hex(sf.profiles.csv_path)});
  }
  write_trace_csvs(trace, out_dir, m.outputs);

  Scorecard sc = scorecard_from_trace(trace);
  write_file((fs::path(out_dir) / "scorecard.csv").string(),
             scorecard_csv_header() + "\n" + scorecard_csv_row(sc) + "\n");
  m.outputs.push_back("scorecard.csv");

  m.trace_hash_hex = hex64(trace.trace_hash());
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(m, out_dir);
  return trace;
}

void pipeline_campaign(const CampaignFile& cf, const std::string& out_dir) {
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);

  NetworkTopology topology = load_topology(cf.topology_path);
  ProfileLibrary library = open_profiles(cf.profiles, cf.plan.seed);

  std::unordered_map<BusId, std::ofstream> files;
  std::vector<std::string> names;
  char buf[256];
  FeatureRowSink sink = [&](BusId bus, const FeatureVector& row, double label) {
    auto it = files.find(bus);
    if (it == files.end()) {
      std::string name = "features_bus_" + std::to_string(bus) + ".csv";
      names.push_back(name);
      auto [ins, ok] = files.emplace(bus, std::ofstream(fs::path(out_dir) / name, std::ios::binary));
      it = ins;
      it->second << "v_mean,v_sq_mean,delta_mean,t_k,s_label_kva\n";
    }
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%g,%.12g\n", row[0], row[1], row[2], row[3],
                  label);
    it->second << buf;
  };

  if (verbose_output()) {
    // report per-day completion on stderr, counting the first bus's rows
    int rows_per_day = kSecondsPerDay / std::max(1, cf.plan.window_len_s);
    int done = 0;
    BusId first_bus = -1;
    FeatureRowSink wrapped = [&](BusId bus, const FeatureVector& row, double label) {
      sink(bus, row, label);
      if (first_bus == -1) first_bus = bus;
      if (bus == first_bus && ++done % rows_per_day == 0) {
        std::cerr << "campaign: day " << done / rows_per_day << "/" << cf.plan.days << " done\n";
      }
    };
    run_training_campaign(cf.plan, topology, library, wrapped);
  } else {
    run_training_campaign(cf.plan, topology, library, sink);
  }
  files.clear();

  RunManifest m;
  m.command = "campaign";
  m.artifact_version = kArtifactVersion;
  m.seed = cf.plan.seed;
  m.config_text = campaign_to_json(cf);
  m.config_hash_hex = hex64(fnv1a(m.config_text));
  m.inputs.push_back({"topology", cf.topology_path, file_digest_hex(cf.topology_path)});
  std::sort(names.begin(), names.end());
  m.outputs = names;
  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(m, out_dir);
}

void read_feature_rows(const std::string& path, std::vector<FeatureVector>& features,
                       std::vector<double>& labels) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file " + path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    FeatureVector f{};
    double label;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &f[0], &f[1], &f[2], &f[3], &label) != 5) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
    features.push_back(f);
    labels.push_back(label);
  }
}

std::vector<BusId> list_feature_buses(const std::string& history_dir) {
  std::vector<BusId> buses;
  if (!fs::is_directory(history_dir)) {
    throw std::runtime_error(history_dir + " is not a directory");
  }
  for (const auto& entry : fs::directory_iterator(history_dir)) {
    std::string name = entry.path().filename().string();
    int bus;
    if (std::sscanf(name.c_str(), "features_bus_%d.csv", &bus) == 1) buses.push_back(bus);
  }
  std::sort(buses.begin(), buses.end());
  return buses;
}

ModelStore load_models(const std::string& dir) {
  ModelStore store;
  if (!fs::is_directory(dir)) throw std::runtime_error(dir + " is not a directory");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::string name = entry.path().filename().string();
    int bus;
    if (std::sscanf(name.c_str(), "%d.model", &bus) == 1) {
      store.emplace(bus, NeuralNet::load(entry.path().string()));
    }
  }
  return store;
}

void pipeline_train(const TrainInvocation& ti) {
  auto t0 = std::chrono::steady_clock::now();
  if (ti.out_dir.empty()) throw std::runtime_error("train needs an output directory");
  fs::create_directories(ti.out_dir);

  std::vector<BusId> buses = ti.buses.empty() ? list_feature_buses(ti.history_dir) : ti.buses;
  if (buses.empty()) {
    throw std::runtime_error("no features_bus_<id>.csv files found in " + ti.history_dir);
  }

  RunManifest m;
  m.command = "train";
  m.artifact_version = kArtifactVersion;
  m.seed = ti.config.seed;
  m.config_text = train_to_json(ti);
  m.config_hash_hex = hex64(fnv1a(m.config_text));

  if (ti.shared_model) {
    std::vector<FeatureVector> features;
    std::vector<double> labels;
    for (BusId bus : buses) {
      std::string path =
          (fs::path(ti.history_dir) / ("features_bus_" + std::to_string(bus) + ".csv")).string();
      read_feature_rows(path, features, labels);
      m.inputs.push_back({"features_bus_" + std::to_string(bus), path, file_digest_hex(path)});
    }
    EstimatorConfig cfg = ti.config;
    TrainingDataset ds = dataset_from_rows(std::move(features), std::move(labels), cfg);
    NeuralNet net = train(ds, cfg);
    net.save((fs::path(ti.out_dir) / "shared.model").string());
    m.outputs.push_back("shared.model");
  } else {
    for (BusId bus : buses) {
      std::string path =
          (fs::path(ti.history_dir) / ("features_bus_" + std::to_string(bus) + ".csv")).string();
      m.inputs.push_back({"features_bus_" + std::to_string(bus), path, file_digest_hex(path)});
    }
    unsigned jobs = ti.jobs > 0 ? static_cast<unsigned>(ti.jobs)
                                : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&]() {
      while (true) {
        std::size_t i = cursor.fetch_add(1);
        if (i >= buses.size() || failed.load()) break;
        BusId bus = buses[i];
        try {
          std::vector<FeatureVector> features;
          std::vector<double> labels;
          std::string path =
              (fs::path(ti.history_dir) / ("features_bus_" + std::to_string(bus) + ".csv")).string();
          read_feature_rows(path, features, labels);
          EstimatorConfig cfg = ti.config;
          cfg.seed = Rng(ti.config.seed).derive("train", static_cast<std::uint64_t>(bus)).next_u64();
          TrainingDataset ds = dataset_from_rows(std::move(features), std::move(labels), cfg);
          NeuralNet net = train(ds, cfg);
          net.save((fs::path(ti.out_dir) / (std::to_string(bus) + ".model")).string());
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed = true;
          error_message = "training bus " + std::to_string(bus) + ": " + e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (failed) throw std::runtime_error(error_message);
    for (BusId bus : buses) m.outputs.push_back(std::to_string(bus) + ".model");
  }

  m.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(m, ti.out_dir);
}

Scorecard pipeline_report(const std::string& run_dir) {
  Scorecard sc = scorecard_from_files(run_dir, "");
  write_file((fs::path(run_dir) / "scorecard_recomputed.csv").string(),
             scorecard_csv_header() + "\n" + scorecard_csv_row(sc) + "\n");
  return sc;
}

std::vector<Scorecard> reproduce_table1(const ScenarioFile& base, const std::string& models_dir,
                                        const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::vector<Scorecard> cards;
  const ScenarioMode modes[] = {ScenarioMode::NoEv, ScenarioMode::NoControl,
                                ScenarioMode::IdealAimd, ScenarioMode::ProposedAimd};
  for (ScenarioMode mode : modes) {
    ScenarioFile sf = base;
    sf.engine.mode = mode;
    if (mode == ScenarioMode::ProposedAimd && !models_dir.empty()) sf.models_dir = models_dir;
    std::string dir = (fs::path(out_dir) / to_string(mode)).string();
    SimulationTrace trace = pipeline_simulate(sf, dir);
    cards.push_back(scorecard_from_trace(trace));
  }
  std::string csv = scorecard_csv_header() + "\n";
  for (const Scorecard& sc : cards) csv += scorecard_csv_row(sc) + "\n";
  write_file((fs::path(out_dir) / "table1.csv").string(), csv);
  return cards;
}

int pipeline_rerun(const std::string& manifest_path, const std::string& out_dir) {
  RunManifest m = read_manifest(manifest_path);
  for (const ManifestInput& in : m.inputs) {
    std::string digest = file_digest_hex(in.path);
    if (digest != in.fnv64_hex) {
      throw std::runtime_error("input " + in.name + " (" + in.path +
                               ") changed since the original run: digest " + digest +
                               " != " + in.fnv64_hex);
    }
  }
  if (m.command == "simulate") {
    pipeline_simulate(scenario_from_json(m.config_text, manifest_path), out_dir);
  } else if (m.command == "campaign") {
    pipeline_campaign(campaign_from_json(m.config_text, manifest_path), out_dir);
  } else if (m.command == "train") {
    TrainInvocation ti = train_from_json(m.config_text, manifest_path);
    ti.out_dir = out_dir;
    pipeline_train(ti);
  } else if (m.command == "synth-profiles") {
    ordered_json j = parse_json(m.config_text, manifest_path);
    ProfilesSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.seed_given = true;
    spec.households = j.at("households").get<int>();
    spec.days = j.at("days").get<int>();
    spec.params = synth_params_from(j.at("params"));
    pipeline_synth_profiles(spec, out_dir);
  } else if (m.command == "build-grid") {
    GridConfig gc = grid_config_from_json(m.config_text, manifest_path);
    fs::create_directories(out_dir);
    pipeline_build_grid(gc, (fs::path(out_dir) / "grid.txt").string());
  } else {
    throw std::runtime_error("manifest command '" + m.command + "' cannot be re-run");
  }
  return 0;
}

int cli_dispatch(int argc, const char* const* argv) {
  CLI::App app{"Distributed data-driven AIMD control of EV charging on a radial feeder"};
  app.require_subcommand(1);

  // build-grid
  auto* build = app.add_subcommand("build-grid", "Construct the radial grid topology file");
  std::string build_config, build_out;
  build->add_option("--config", build_config, "grid config JSON (defaults when omitted)");
  build->add_option("--out", build_out, "output topology file")->required();

  // synth-profiles
  auto* synth = app.add_subcommand("synth-profiles", "Generate synthetic household load profiles");
  std::uint64_t synth_seed = 0;
  int synth_households = 4, synth_days = 1;
  std::string synth_out;
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--households", synth_households, "household count");
  synth->add_option("--days", synth_days, "distinct days per household");
  synth->add_option("--out", synth_out, "output directory")->required();

  // solve
  auto* solve = app.add_subcommand("solve", "Solve one power flow and print the solution as CSV");
  std::string solve_topology, solve_loads;
  solve->add_option("--topology", solve_topology, "topology file")->required();
  solve->add_option("--loads", solve_loads, "loads CSV (bus,P_kW,Q_kvar)")->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run one day-long scenario");
  std::string sim_scenario, sim_out;
  sim->add_option("--scenario", sim_scenario, "scenario JSON file")->required();
  sim->add_option("--out", sim_out, "output directory")->required();

  // campaign
  auto* camp = app.add_subcommand("campaign", "Run the 30-day training campaign");
  std::string camp_plan, camp_out;
  camp->add_option("--plan", camp_plan, "campaign plan JSON file")->required();
  camp->add_option("--out", camp_out, "output directory")->required();

  // train
  auto* tr = app.add_subcommand("train", "Train per-node feeder-load estimators");
  TrainInvocation ti;
  std::vector<int> tr_buses;
  tr->add_option("--history", ti.history_dir, "campaign output directory")->required();
  tr->add_option("--out", ti.out_dir, "model output directory")->required();
  tr->add_option("--bus", tr_buses, "train only these buses (default: all found)");
  tr->add_flag("--shared", ti.shared_model, "train one pooled model instead of per-node models");
  tr->add_option("--epochs", ti.config.epochs, "training epochs");
  tr->add_option("--lr", ti.config.learning_rate, "learning rate");
  tr->add_option("--momentum", ti.config.momentum, "momentum");
  tr->add_option("--batch", ti.config.batch_size, "mini-batch size");
  tr->add_option("--val-frac", ti.config.validation_fraction, "validation fraction");
  tr->add_option("--seed", ti.config.seed, "training seed");
  tr->add_option("--max-rows", ti.config.max_rows, "cap on training rows per node (0 = all)");
  tr->add_option("--k", ti.config.k_intervals, "time intervals per day baked into the features");
  tr->add_option("--focus", ti.config.focus_label_kva,
                 "double the weight of rows with labels near this kVA value (0 = off)");
  tr->add_option("--focus-width", ti.config.focus_halfwidth_kva, "half-width of the focus band");
  tr->add_option("--jobs", ti.jobs, "parallel training jobs (0 = hardware)");

  // report
  auto* rep = app.add_subcommand("report", "Recompute the scorecard from a run directory");
  std::string rep_in;
  rep->add_option("--in", rep_in, "run directory")->required();

  // table1
  auto* tab = app.add_subcommand("table1", "Run all four scenarios and tabulate the scorecards");
  std::string tab_scenario, tab_out, tab_models;
  tab->add_option("--scenario", tab_scenario, "base scenario JSON file")->required();
  tab->add_option("--out", tab_out, "output directory")->required();
  tab->add_option("--models", tab_models, "trained model directory for ProposedAimd");

  // rerun
  auto* rr = app.add_subcommand("rerun", "Re-execute a pipeline step from its manifest");
  std::string rr_manifest, rr_out;
  rr->add_option("--manifest", rr_manifest, "manifest.json path")->required();
  rr->add_option("--out", rr_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (build->parsed()) {
      GridConfig gc = build_config.empty() ? GridConfig{} : load_grid_config(build_config);
      pipeline_build_grid(gc, build_out);
      // manifest beside the topology file
      RunManifest m;
      m.command = "build-grid";
      m.artifact_version = kArtifactVersion;
      m.config_text = grid_config_to_json(gc);
      m.config_hash_hex = hex64(fnv1a(m.config_text));
      m.outputs = {fs::path(build_out).filename().string()};
      fs::path dir = fs::path(build_out).parent_path();
      write_manifest(m, dir.empty() ? "." : dir.string());
      std::cout << "wrote " << build_out << "\n";
    } else if (synth->parsed()) {
      ProfilesSpec spec;
      spec.seed = synth_seed;
      spec.seed_given = true;
      spec.households = synth_households;
      spec.days = synth_days;
      pipeline_synth_profiles(spec, synth_out);
      std::cout << "wrote " << (fs::path(synth_out) / "profiles.csv").string() << "\n";
    } else if (solve->parsed()) {
      NetworkTopology topology = load_topology(solve_topology);
      std::ifstream in(solve_loads);
      if (!in) throw std::runtime_error("cannot open loads file " + solve_loads);
      std::string line;
      std::getline(in, line);
      std::vector<NodalInjection> injections;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        NodalInjection inj;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf", &inj.bus, &inj.active_kw, &inj.reactive_kvar) != 3) {
          throw std::runtime_error(solve_loads + ": malformed row '" + line + "'");
        }
        injections.push_back(inj);
      }
      PowerFlowSolution sol = solve_distflow(topology, injections);
      char buf[256];
      std::printf("bus,v_pu,delta_rad\n");
      for (const Bus& b : topology.buses()) {
        std::size_t i = topology.bus_index(b.id);
        std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", b.id, sol.voltage_mag_pu[i],
                      sol.phase_angle_rad[i]);
        std::fputs(buf, stdout);
      }
      std::printf("# feeder_p_kw=%.12g feeder_q_kvar=%.12g s_kva=%.12g converged=%d iterations=%d\n",
                  sol.feeder_p_kw, sol.feeder_q_kvar, sol.feeder_s_kva, sol.converged ? 1 : 0,
                  sol.iterations);
      if (!sol.converged) throw std::runtime_error("power flow did not converge: " + sol.diagnostic);
    } else if (sim->parsed()) {
      ScenarioFile sf = load_scenario_file(sim_scenario);
      SimulationTrace trace = pipeline_simulate(sf, sim_out);
      Scorecard sc = scorecard_from_trace(trace);
      std::cout << scorecard_table(std::span<const Scorecard>(&sc, 1));
    } else if (camp->parsed()) {
      CampaignFile cf = load_campaign_file(camp_plan);
      pipeline_campaign(cf, camp_out);
      std::cout << "campaign features written to " << camp_out << "\n";
    } else if (tr->parsed()) {
      for (int b : tr_buses) ti.buses.push_back(b);
      pipeline_train(ti);
      std::cout << "models written to " << ti.out_dir << "\n";
    } else if (rep->parsed()) {
      Scorecard sc = pipeline_report(rep_in);
      std::cout << scorecard_table(std::span<const Scorecard>(&sc, 1));
    } else if (tab->parsed()) {
      ScenarioFile sf = load_scenario_file(tab_scenario);
      std::vector<Scorecard> cards = reproduce_table1(sf, tab_models, tab_out);
      std::cout << scorecard_table(cards);
    } else if (rr->parsed()) {
      pipeline_rerun(rr_manifest, rr_out);
      std::cout << "re-ran " << rr_manifest << " into " << rr_out << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace gridaimd
