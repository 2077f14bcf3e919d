#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridaimd/grid_model.hpp"

namespace gridaimd {

struct NodalInjection {
  BusId bus = 0;
  double active_kw = 0.0;    // load positive
  double reactive_kvar = 0.0;
};

struct LineFlow {
  double active_kw = 0.0;  // sending-end flow on the segment
  double reactive_kvar = 0.0;
};

struct PowerFlowSolution {
  std::vector<double> voltage_mag_pu;   // indexed by dense bus index
  std::vector<double> phase_angle_rad;  // radians, root = 0
  std::vector<LineFlow> line_flow;      // indexed like topology.lines()
  double feeder_p_kw = 0.0;
  double feeder_q_kvar = 0.0;
  double feeder_s_kva = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;  // set on non-convergence / infeasibility
};

struct SolverOptions {
  double tolerance_pu = 1e-8;
  int max_iter = 50;
};

// Reusable solver bound to one immutable topology. Precomputes the sweep
// order and per-unit impedances; solves are pure given the injection vector,
// so one instance can serve many sequential ticks (warm-started) and many
// instances may run concurrently on the shared topology.
class FeederSolver {
 public:
  explicit FeederSolver(const NetworkTopology& topology);

  std::size_t bus_count() const { return n_; }

  // Dense injections indexed by bus index, in kW / kvar.
  PowerFlowSolution solve_distflow_dense(std::span<const double> p_kw, std::span<const double> q_kvar,
                                         const SolverOptions& options = {},
                                         const std::vector<double>* warm_voltage_pu = nullptr) const;
  PowerFlowSolution solve_lindistflow_dense(std::span<const double> p_kw,
                                            std::span<const double> q_kvar) const;

  std::vector<double> recover_phase_angles(const PowerFlowSolution& solution) const;

  const NetworkTopology& topology() const { return *topology_; }

 private:
  void to_dense(std::span<const NodalInjection> injections, std::vector<double>& p,
                std::vector<double>& q) const;
  friend PowerFlowSolution solve_distflow(const NetworkTopology&, std::span<const NodalInjection>,
                                          double, int);
  friend PowerFlowSolution solve_lindistflow(const NetworkTopology&, std::span<const NodalInjection>);

  const NetworkTopology* topology_;
  std::size_t n_ = 0;              // bus count
  double s_base_kva_ = 0.0;
  double v0_ = 1.0;
  // lines re-indexed so that line i feeds bus order_[i+1]; children contiguous
  std::vector<std::size_t> line_order_;     // topology line index per sweep position
  std::vector<std::size_t> child_bus_;      // dense bus index fed by sweep position i
  std::vector<std::size_t> parent_bus_;     // dense bus index at the sending end
  std::vector<double> r_pu_, x_pu_;         // per sweep position
};

// One-shot conveniences matching the module contract.
PowerFlowSolution solve_distflow(const NetworkTopology& topology,
                                 std::span<const NodalInjection> injections,
                                 double tolerance_pu = 1e-8, int max_iter = 50);
PowerFlowSolution solve_lindistflow(const NetworkTopology& topology,
                                    std::span<const NodalInjection> injections);
std::vector<double> recover_phase_angles(const NetworkTopology& topology,
                                         const PowerFlowSolution& solution);

}  // namespace gridaimd
