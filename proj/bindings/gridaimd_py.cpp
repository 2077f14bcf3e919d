#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gridaimd/engine.hpp"
#include "gridaimd/harness.hpp"

namespace py = pybind11;
using namespace gridaimd;

namespace {

PowerFlowSolution solve_from_rows(const NetworkTopology& topology,
                                  const std::vector<std::tuple<int, double, double>>& loads,
                                  bool linearized) {
  std::vector<NodalInjection> injections;
  injections.reserve(loads.size());
  for (const auto& [bus, p, q] : loads) injections.push_back({bus, p, q});
  return linearized ? solve_lindistflow(topology, injections) : solve_distflow(topology, injections);
}

}  // namespace

PYBIND11_MODULE(_gridaimd, m) {
  m.doc() = "AIMD-based EV charging control on a radial distribution feeder";

  py::class_<GridConfig>(m, "GridConfig")
      .def(py::init<>())
      .def_readwrite("neighborhoods", &GridConfig::neighborhoods)
      .def_readwrite("transformers_per_neighborhood", &GridConfig::transformers_per_neighborhood)
      .def_readwrite("houses_per_inner_node", &GridConfig::houses_per_inner_node)
      .def_readwrite("substation_rating_kva", &GridConfig::substation_rating_kva)
      .def_readwrite("primary_voltage_v", &GridConfig::primary_voltage_v)
      .def_readwrite("secondary_voltage_v", &GridConfig::secondary_voltage_v)
      .def_readwrite("substation_voltage_pu", &GridConfig::substation_voltage_pu)
      .def_readwrite("primary_impedance_scale", &GridConfig::primary_impedance_scale)
      .def_readwrite("transformer_r_ohm", &GridConfig::transformer_r_ohm)
      .def_readwrite("transformer_x_ohm", &GridConfig::transformer_x_ohm)
      .def_readwrite("service_drop_r_ohm", &GridConfig::service_drop_r_ohm)
      .def_readwrite("service_drop_x_ohm", &GridConfig::service_drop_x_ohm);

  py::class_<Bus>(m, "Bus")
      .def_readonly("id", &Bus::id)
      .def_readonly("nominal_voltage_v", &Bus::nominal_voltage_v)
      .def_property_readonly("kind", [](const Bus& b) { return to_string(b.kind); });

  py::class_<LineSegment>(m, "LineSegment")
      .def_readonly("from_bus", &LineSegment::from_bus)
      .def_readonly("to_bus", &LineSegment::to_bus)
      .def_readonly("resistance_ohm", &LineSegment::resistance_ohm)
      .def_readonly("reactance_ohm", &LineSegment::reactance_ohm)
      .def_readonly("rating_kva", &LineSegment::rating_kva);

  py::class_<NetworkTopology>(m, "NetworkTopology")
      .def_property_readonly("buses", &NetworkTopology::buses)
      .def_property_readonly("lines", &NetworkTopology::lines)
      .def_property_readonly("root", &NetworkTopology::root)
      .def_property_readonly("substation_rating_kva", &NetworkTopology::substation_rating_kva)
      .def("buses_of_kind", [](const NetworkTopology& t, const std::string& kind) {
        auto k = bus_kind_from_string(kind);
        if (!k) throw std::invalid_argument("unknown bus kind " + kind);
        return t.buses_of_kind(*k);
      });

  m.def("build_paper_grid", &build_paper_grid, py::arg("config") = GridConfig{});
  m.def("validate_radial", [](const NetworkTopology& t) -> py::object {
    auto v = validate_radial(t);
    if (!v) return py::none();
    return py::make_tuple(v->invariant, v->detail);
  });
  m.def("path_to_root", &path_to_root, py::arg("topology"), py::arg("bus"));
  m.def("save_topology", &save_topology);
  m.def("load_topology", &load_topology);

  py::class_<PowerFlowSolution>(m, "PowerFlowSolution")
      .def_readonly("voltage_mag_pu", &PowerFlowSolution::voltage_mag_pu)
      .def_readonly("phase_angle_rad", &PowerFlowSolution::phase_angle_rad)
      .def_readonly("feeder_p_kw", &PowerFlowSolution::feeder_p_kw)
      .def_readonly("feeder_q_kvar", &PowerFlowSolution::feeder_q_kvar)
      .def_readonly("feeder_s_kva", &PowerFlowSolution::feeder_s_kva)
      .def_readonly("converged", &PowerFlowSolution::converged)
      .def_readonly("iterations", &PowerFlowSolution::iterations);

  m.def("solve_distflow", [](const NetworkTopology& t,
                             const std::vector<std::tuple<int, double, double>>& loads) {
    return solve_from_rows(t, loads, false);
  }, py::arg("topology"), py::arg("loads"), "loads: list of (bus, P_kW, Q_kvar)");
  m.def("solve_lindistflow", [](const NetworkTopology& t,
                                const std::vector<std::tuple<int, double, double>>& loads) {
    return solve_from_rows(t, loads, true);
  }, py::arg("topology"), py::arg("loads"));

  py::class_<AimdParams>(m, "AimdParams")
      .def(py::init<>())
      .def_readwrite("alpha_a", &AimdParams::alpha_a)
      .def_readwrite("beta", &AimdParams::beta)
      .def_readwrite("v_min_pu", &AimdParams::v_min_pu)
      .def_readwrite("period_s", &AimdParams::period_s)
      .def_readwrite("epsilon_kva", &AimdParams::epsilon_kva);

  m.def("aimd_step", [](double current, bool congested, double v_local, const AimdParams& params,
                        double max_current) {
    CongestionVerdict verdict{congested, VerdictSource::IdealBroadcast, std::nullopt};
    return aimd_step(current, verdict, v_local, params, max_current);
  }, py::arg("current_a"), py::arg("congested"), py::arg("v_local_pu"),
     py::arg("params") = AimdParams{}, py::arg("max_current_a") = 30.0);
  m.def("detect_ce_ideal", [](double s_kva, double s_rated_kva) {
    return detect_ce_ideal(s_kva, s_rated_kva).congested;
  });

  m.def("time_interval", &time_interval, py::arg("t_s"), py::arg("k"));
  m.def("jain_fairness", [](const std::vector<double>& x) {
    return jain_fairness(std::span<const double>(x.data(), x.size()));
  });
  m.def("max_overload_pct", [](const std::vector<double>& s, double rated) {
    return max_overload_pct(std::span<const double>(s.data(), s.size()), rated);
  });

  // pipeline entry points (JSON-configured, same as the CLI)
  m.def("pipeline_build_grid", [](const GridConfig& config, const std::string& out) {
    pipeline_build_grid(config, out);
  });
  m.def("pipeline_simulate", [](const std::string& scenario_path, const std::string& out_dir) {
    SimulationTrace trace = pipeline_simulate(load_scenario_file(scenario_path), out_dir);
    Scorecard sc = scorecard_from_trace(trace);
    py::dict d;
    d["scenario"] = sc.scenario;
    d["max_overload_pct"] = sc.max_overload_pct;
    d["avg_power_kw"] = sc.avg_power_kw;
    d["avg_final_soc_pct"] = sc.avg_final_soc_pct;
    d["fairness"] = sc.fairness;
    d["comm_exchanges_per_ev"] = sc.comm_exchanges_per_ev;
    d["peak_s_kva"] = *std::max_element(trace.feeder_s_kva.begin(), trace.feeder_s_kva.end());
    return d;
  });
  m.def("pipeline_campaign", [](const std::string& plan_path, const std::string& out_dir) {
    pipeline_campaign(load_campaign_file(plan_path), out_dir);
  });
  m.def("cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("gridaimd");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_dispatch(static_cast<int>(argv.size()), argv.data());
  }, "Invoke the gridaimd CLI with an argument list");
}
