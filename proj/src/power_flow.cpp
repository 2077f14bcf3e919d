#include "gridaimd/power_flow.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gridaimd {

FeederSolver::FeederSolver(const NetworkTopology& topology) : topology_(&topology) {
  n_ = topology.buses().size();
  s_base_kva_ = topology.substation_rating_kva();
  v0_ = topology.substation_voltage_pu();
  if (s_base_kva_ <= 0) throw std::invalid_argument("topology has non-positive power base");

  const auto& lines = topology.lines();
  std::vector<std::vector<std::size_t>> out_edges(n_);
  for (std::size_t li = 0; li < lines.size(); ++li) {
    out_edges[topology.bus_index(lines[li].from_bus)].push_back(li);
  }

  line_order_.reserve(lines.size());
  child_bus_.reserve(lines.size());
  parent_bus_.reserve(lines.size());
  r_pu_.reserve(lines.size());
  x_pu_.reserve(lines.size());

  // BFS from the root; positions are parent-before-child by construction.
  std::vector<std::size_t> frontier{topology.bus_index(topology.root())};
  std::size_t head = 0;
  std::vector<char> seen(n_, 0);
  seen[frontier[0]] = 1;
  while (head < frontier.size()) {
    std::size_t u = frontier[head++];
    for (std::size_t li : out_edges[u]) {
      const LineSegment& l = lines[li];
      std::size_t c = topology.bus_index(l.to_bus);
      if (seen[c]) throw std::invalid_argument("topology is not radial (bus reached twice)");
      seen[c] = 1;
      double v_base = topology.buses()[c].nominal_voltage_v;
      double z_base = v_base * v_base / (s_base_kva_ * 1e3);
      line_order_.push_back(li);
      child_bus_.push_back(c);
      parent_bus_.push_back(u);
      r_pu_.push_back(l.resistance_ohm / z_base);
      x_pu_.push_back(l.reactance_ohm / z_base);
      frontier.push_back(c);
    }
  }
  if (frontier.size() != n_) throw std::invalid_argument("topology is not connected");
}

void FeederSolver::to_dense(std::span<const NodalInjection> injections, std::vector<double>& p,
                            std::vector<double>& q) const {
  p.assign(n_, 0.0);
  q.assign(n_, 0.0);
  for (const NodalInjection& inj : injections) {
    if (!std::isfinite(inj.active_kw) || !std::isfinite(inj.reactive_kvar)) {
      throw std::invalid_argument("injection on bus " + std::to_string(inj.bus) + " is not finite");
    }
    if (inj.bus == topology_->root()) {
      throw std::invalid_argument("injections are defined only on non-root buses");
    }
    std::size_t i = topology_->bus_index(inj.bus);  // throws on unknown bus
    p[i] += inj.active_kw;
    q[i] += inj.reactive_kvar;
  }
}

PowerFlowSolution FeederSolver::solve_distflow_dense(std::span<const double> p_kw,
                                                     std::span<const double> q_kvar,
                                                     const SolverOptions& options,
                                                     const std::vector<double>* warm_voltage_pu) const {
  if (options.tolerance_pu <= 0) throw std::invalid_argument("tolerance must be positive");
  if (p_kw.size() != n_ || q_kvar.size() != n_) {
    throw std::invalid_argument("dense injection vectors must match bus count");
  }

  const std::size_t m = line_order_.size();
  PowerFlowSolution sol;
  sol.voltage_mag_pu.assign(n_, v0_);
  if (warm_voltage_pu && warm_voltage_pu->size() == n_) sol.voltage_mag_pu = *warm_voltage_pu;
  std::vector<double>& v = sol.voltage_mag_pu;

  std::vector<double> load_p(n_), load_q(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    load_p[i] = p_kw[i] / s_base_kva_;
    load_q[i] = q_kvar[i] / s_base_kva_;
  }

  std::vector<double> send_p(m, 0.0), send_q(m, 0.0);
  std::vector<double> acc_p(n_), acc_q(n_);

  std::size_t root = topology_->bus_index(topology_->root());
  double shift = 0.0;
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    // Backward: aggregate receiving-end flows plus the loss of each segment,
    // loss evaluated with the previous iterate's sending flow and voltage.
    acc_p = load_p;
    acc_q = load_q;
    double flow_shift = 0.0;
    for (std::size_t pos = m; pos-- > 0;) {
      std::size_t c = child_bus_[pos];
      std::size_t par = parent_bus_[pos];
      double vp2 = v[par] * v[par];
      double loss_scale = (send_p[pos] * send_p[pos] + send_q[pos] * send_q[pos]) / vp2;
      double np = acc_p[c] + r_pu_[pos] * loss_scale;
      double nq = acc_q[c] + x_pu_[pos] * loss_scale;
      if (!std::isfinite(np) || !std::isfinite(nq)) {
        sol.converged = false;
        sol.iterations = iter + 1;
        sol.diagnostic = "diverging branch flow into bus " +
                         std::to_string(topology_->buses()[c].id) + " on iteration " +
                         std::to_string(iter + 1) + " (infeasible loading)";
        sol.line_flow.assign(topology_->lines().size(), LineFlow{});
        sol.phase_angle_rad.assign(n_, 0.0);
        return sol;
      }
      flow_shift = std::max({flow_shift, std::abs(np - send_p[pos]), std::abs(nq - send_q[pos])});
      send_p[pos] = np;
      send_q[pos] = nq;
      acc_p[par] += np;
      acc_q[par] += nq;
    }

    // Forward: squared-voltage recursion of the branch flow model.
    shift = flow_shift;
    v[root] = v0_;
    for (std::size_t pos = 0; pos < m; ++pos) {
      std::size_t c = child_bus_[pos];
      std::size_t par = parent_bus_[pos];
      double vp2 = v[par] * v[par];
      double s2 = send_p[pos] * send_p[pos] + send_q[pos] * send_q[pos];
      double v2 = vp2 - 2.0 * (r_pu_[pos] * send_p[pos] + x_pu_[pos] * send_q[pos]) +
                  (r_pu_[pos] * r_pu_[pos] + x_pu_[pos] * x_pu_[pos]) * s2 / vp2;
      if (!(v2 > 0.0)) {  // also catches NaN
        sol.converged = false;
        sol.iterations = iter + 1;
        sol.diagnostic = "voltage collapse at bus " +
                         std::to_string(topology_->buses()[c].id) + " on iteration " +
                         std::to_string(iter + 1);
        sol.line_flow.assign(topology_->lines().size(), LineFlow{});
        sol.phase_angle_rad.assign(n_, 0.0);
        return sol;
      }
      double nv = std::sqrt(v2);
      shift = std::max(shift, std::abs(nv - v[c]));
      v[c] = nv;
    }

    if (shift < options.tolerance_pu) {
      ++iter;
      break;
    }
  }

  sol.iterations = iter;
  sol.converged = shift < options.tolerance_pu;
  if (!sol.converged) {
    sol.diagnostic = "did not converge within " + std::to_string(options.max_iter) +
                     " iterations (last shift " + std::to_string(shift) + " pu)";
  }

  sol.line_flow.assign(topology_->lines().size(), LineFlow{});
  for (std::size_t pos = 0; pos < m; ++pos) {
    sol.line_flow[line_order_[pos]] = {send_p[pos] * s_base_kva_, send_q[pos] * s_base_kva_};
    if (parent_bus_[pos] == root) {
      sol.feeder_p_kw += send_p[pos] * s_base_kva_;
      sol.feeder_q_kvar += send_q[pos] * s_base_kva_;
    }
  }
  sol.feeder_s_kva = std::hypot(sol.feeder_p_kw, sol.feeder_q_kvar);
  sol.phase_angle_rad = recover_phase_angles(sol);
  return sol;
}

PowerFlowSolution FeederSolver::solve_lindistflow_dense(std::span<const double> p_kw,
                                                        std::span<const double> q_kvar) const {
  if (p_kw.size() != n_ || q_kvar.size() != n_) {
    throw std::invalid_argument("dense injection vectors must match bus count");
  }
  const std::size_t m = line_order_.size();
  PowerFlowSolution sol;
  sol.converged = true;
  sol.iterations = 1;
  sol.voltage_mag_pu.assign(n_, v0_);
  std::vector<double>& v = sol.voltage_mag_pu;

  // Lossless aggregation of downstream injections.
  std::vector<double> acc_p(n_), acc_q(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    acc_p[i] = p_kw[i] / s_base_kva_;
    acc_q[i] = q_kvar[i] / s_base_kva_;
  }
  std::vector<double> send_p(m), send_q(m);
  for (std::size_t pos = m; pos-- > 0;) {
    std::size_t c = child_bus_[pos];
    send_p[pos] = acc_p[c];
    send_q[pos] = acc_q[c];
    acc_p[parent_bus_[pos]] += acc_p[c];
    acc_q[parent_bus_[pos]] += acc_q[c];
  }

  std::size_t root = topology_->bus_index(topology_->root());
  v[root] = v0_;
  for (std::size_t pos = 0; pos < m; ++pos) {
    std::size_t c = child_bus_[pos];
    double vp2 = v[parent_bus_[pos]] * v[parent_bus_[pos]];
    double v2 = vp2 - 2.0 * (r_pu_[pos] * send_p[pos] + x_pu_[pos] * send_q[pos]);
    if (v2 <= 0.0) {
      sol.converged = false;
      sol.diagnostic = "infeasible loading: non-positive squared voltage at bus " +
                       std::to_string(topology_->buses()[c].id);
      v[c] = 0.0;
      continue;
    }
    v[c] = std::sqrt(v2);
  }

  sol.line_flow.assign(topology_->lines().size(), LineFlow{});
  for (std::size_t pos = 0; pos < m; ++pos) {
    sol.line_flow[line_order_[pos]] = {send_p[pos] * s_base_kva_, send_q[pos] * s_base_kva_};
    if (parent_bus_[pos] == root) {
      sol.feeder_p_kw += send_p[pos] * s_base_kva_;
      sol.feeder_q_kvar += send_q[pos] * s_base_kva_;
    }
  }
  sol.feeder_s_kva = std::hypot(sol.feeder_p_kw, sol.feeder_q_kvar);
  if (sol.converged) sol.phase_angle_rad = recover_phase_angles(sol);
  else sol.phase_angle_rad.assign(n_, 0.0);
  return sol;
}

std::vector<double> FeederSolver::recover_phase_angles(const PowerFlowSolution& solution) const {
  if (solution.voltage_mag_pu.size() != n_ || solution.line_flow.size() != topology_->lines().size()) {
    throw std::invalid_argument("solution shape does not match topology");
  }
  std::vector<double> delta(n_, 0.0);
  for (std::size_t pos = 0; pos < line_order_.size(); ++pos) {
    std::size_t c = child_bus_[pos];
    std::size_t par = parent_bus_[pos];
    const LineFlow& f = solution.line_flow[line_order_[pos]];
    double p = f.active_kw / s_base_kva_;
    double q = f.reactive_kvar / s_base_kva_;
    double denom = solution.voltage_mag_pu[par] * solution.voltage_mag_pu[c];
    // sin(delta_parent - delta_child) = (x P - r Q) / (V_parent V_child)
    double s = denom > 0 ? (x_pu_[pos] * p - r_pu_[pos] * q) / denom : 0.0;
    s = std::clamp(s, -1.0, 1.0);
    delta[c] = delta[par] - std::asin(s);
  }
  return delta;
}

PowerFlowSolution solve_distflow(const NetworkTopology& topology,
                                 std::span<const NodalInjection> injections, double tolerance_pu,
                                 int max_iter) {
  FeederSolver solver(topology);
  std::vector<double> p, q;
  solver.to_dense(injections, p, q);
  return solver.solve_distflow_dense(p, q, SolverOptions{tolerance_pu, max_iter});
}

PowerFlowSolution solve_lindistflow(const NetworkTopology& topology,
                                    std::span<const NodalInjection> injections) {
  FeederSolver solver(topology);
  std::vector<double> p, q;
  solver.to_dense(injections, p, q);
  return solver.solve_lindistflow_dense(p, q);
}

std::vector<double> recover_phase_angles(const NetworkTopology& topology,
                                         const PowerFlowSolution& solution) {
  return FeederSolver(topology).recover_phase_angles(solution);
}

}  // namespace gridaimd
