#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace gridaimd {

using BusId = int;

enum class BusKind { SubstationRoot, PrimaryJunction, TransformerSecondary, HouseLoad, HouseEv };

std::string to_string(BusKind kind);
std::optional<BusKind> bus_kind_from_string(const std::string& s);

struct Bus {
  BusId id = 0;
  BusKind kind = BusKind::PrimaryJunction;
  double nominal_voltage_v = 0.0;
};

struct LineSegment {
  BusId from_bus = 0;  // parent in the tree
  BusId to_bus = 0;
  double resistance_ohm = 0.0;  // referred to the to_bus voltage level
  double reactance_ohm = 0.0;
  double rating_kva = 0.0;  // > 0 on transformer segments, 0 = unrated line
};

struct GridConfig {
  int neighborhoods = 26;
  int transformers_per_neighborhood = 4;  // one inner node per transformer
  int houses_per_inner_node = 4;
  double substation_rating_kva = 2500.0;
  double primary_voltage_v = 4800.0;
  double secondary_voltage_v = 240.0;
  double substation_voltage_pu = 1.0;
  // Scale on the built-in primary line table; the published IEEE-37 lengths
  // and per-mile impedances are a stand-in for the unknown original model.
  double primary_impedance_scale = 1.3;
  // Transformer series impedance referred to the secondary side (25 kVA,
  // 4800/240 V, z ~ 1.2% + j1.3% on its own base; lumps the shared secondary
  // main between the transformer and the service drops).
  double transformer_r_ohm = 0.018;
  double transformer_x_ohm = 0.028;
  double transformer_rating_kva = 25.0;
  // Secondary service drop per house node.
  double service_drop_r_ohm = 0.014;
  double service_drop_x_ohm = 0.005;
};

class NetworkTopology {
 public:
  NetworkTopology() = default;
  NetworkTopology(std::vector<Bus> buses, std::vector<LineSegment> lines, BusId root,
                  double substation_rating_kva, double base_voltage_primary_v,
                  double base_voltage_secondary_v, double substation_voltage_pu);

  const std::vector<Bus>& buses() const { return buses_; }
  const std::vector<LineSegment>& lines() const { return lines_; }
  BusId root() const { return root_; }
  double substation_rating_kva() const { return substation_rating_kva_; }
  double base_voltage_primary_v() const { return base_voltage_primary_v_; }
  double base_voltage_secondary_v() const { return base_voltage_secondary_v_; }
  double substation_voltage_pu() const { return substation_voltage_pu_; }

  bool has_bus(BusId id) const { return index_of_.count(id) != 0; }
  const Bus& bus(BusId id) const;
  std::size_t bus_index(BusId id) const;  // dense index into buses()
  std::vector<BusId> buses_of_kind(BusKind kind) const;

 private:
  std::vector<Bus> buses_;
  std::vector<LineSegment> lines_;
  BusId root_ = 0;
  double substation_rating_kva_ = 0.0;
  double base_voltage_primary_v_ = 0.0;
  double base_voltage_secondary_v_ = 0.0;
  double substation_voltage_pu_ = 1.0;
  std::unordered_map<BusId, std::size_t> index_of_;
};

struct RadialViolation {
  std::string invariant;  // "root" | "cycle" | "disconnected" | "count" | "leaf-kind" | "impedance" | "base"
  std::string detail;
};

// Construct the paper-style grid: IEEE-37-style primary feeder, one secondary
// network per neighborhood (transformer -> inner node -> house-load/house-ev
// leaf pairs). Deterministic given the config.
NetworkTopology build_paper_grid(const GridConfig& config);

// nullopt when all tree invariants hold; otherwise the first violated one.
std::optional<RadialViolation> validate_radial(const NetworkTopology& topology);

// Segments on the unique root->bus path, root-first. Empty for the root.
std::vector<LineSegment> path_to_root(const NetworkTopology& topology, BusId bus);

// Structured text topology file (SI units), deterministic serialization.
std::string serialize_topology(const NetworkTopology& topology);
NetworkTopology parse_topology(const std::string& text);
void save_topology(const NetworkTopology& topology, const std::string& path);
NetworkTopology load_topology(const std::string& path);

}  // namespace gridaimd
