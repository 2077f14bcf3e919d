#include "gridaimd/grid_model.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace gridaimd {

std::string to_string(BusKind kind) {
  switch (kind) {
    case BusKind::SubstationRoot: return "substation-root";
    case BusKind::PrimaryJunction: return "primary-junction";
    case BusKind::TransformerSecondary: return "transformer-secondary";
    case BusKind::HouseLoad: return "house-load";
    case BusKind::HouseEv: return "house-ev";
  }
  return "unknown";
}

std::optional<BusKind> bus_kind_from_string(const std::string& s) {
  if (s == "substation-root") return BusKind::SubstationRoot;
  if (s == "primary-junction") return BusKind::PrimaryJunction;
  if (s == "transformer-secondary") return BusKind::TransformerSecondary;
  if (s == "house-load") return BusKind::HouseLoad;
  if (s == "house-ev") return BusKind::HouseEv;
  return std::nullopt;
}

NetworkTopology::NetworkTopology(std::vector<Bus> buses, std::vector<LineSegment> lines, BusId root,
                                 double substation_rating_kva, double base_voltage_primary_v,
                                 double base_voltage_secondary_v, double substation_voltage_pu)
    : buses_(std::move(buses)),
      lines_(std::move(lines)),
      root_(root),
      substation_rating_kva_(substation_rating_kva),
      base_voltage_primary_v_(base_voltage_primary_v),
      base_voltage_secondary_v_(base_voltage_secondary_v),
      substation_voltage_pu_(substation_voltage_pu) {
  index_of_.reserve(buses_.size());
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    if (!index_of_.emplace(buses_[i].id, i).second) {
      throw std::invalid_argument("duplicate bus id " + std::to_string(buses_[i].id));
    }
  }
}

const Bus& NetworkTopology::bus(BusId id) const {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw std::out_of_range("unknown bus id " + std::to_string(id));
  return buses_[it->second];
}

std::size_t NetworkTopology::bus_index(BusId id) const {
  auto it = index_of_.find(id);
  if (it == index_of_.end()) throw std::out_of_range("unknown bus id " + std::to_string(id));
  return it->second;
}

std::vector<BusId> NetworkTopology::buses_of_kind(BusKind kind) const {
  std::vector<BusId> out;
  for (const Bus& b : buses_)
    if (b.kind == kind) out.push_back(b.id);
  return out;
}

namespace {

// IEEE 37-node feeder segments in BFS order from the substation node (799),
// single-phase equivalents of the published underground configurations.
struct PrimaryEdge {
  int parent;  // index into the BFS bus order
  double length_ft;
  int config;  // 721..724
};

// BFS bus order: 799, 701, 702, 705, 713, 703, 742, 712, 704, 727, 730, 714,
// 720, 744, 709, 718, 707, 706, 728, 729, 708, 731, 724, 722, 725, 733, 732,
// 734, 737, 710, 738, 735, 736, 711, 741, 740.
constexpr PrimaryEdge kIeee37Edges[] = {
    {0, 1850, 721},   // 799-701
    {1, 960, 722},    // 701-702
    {2, 400, 724},    // 702-705
    {2, 360, 723},    // 702-713
    {2, 1320, 722},   // 702-703
    {3, 320, 724},    // 705-742
    {3, 240, 724},    // 705-712
    {4, 520, 723},    // 713-704
    {5, 240, 724},    // 703-727
    {5, 600, 723},    // 703-730
    {8, 80, 724},     // 704-714
    {8, 800, 723},    // 704-720
    {9, 280, 723},    // 727-744
    {10, 200, 723},   // 730-709
    {11, 520, 724},   // 714-718
    {12, 920, 724},   // 720-707
    {12, 600, 723},   // 720-706
    {13, 200, 724},   // 744-728
    {13, 280, 724},   // 744-729
    {14, 320, 723},   // 709-708
    {14, 600, 723},   // 709-731
    {16, 760, 724},   // 707-724
    {16, 120, 724},   // 707-722
    {17, 280, 724},   // 706-725
    {20, 320, 723},   // 708-733
    {20, 320, 724},   // 708-732
    {25, 560, 723},   // 733-734
    {27, 640, 723},   // 734-737
    {27, 520, 724},   // 734-710
    {28, 400, 723},   // 737-738
    {29, 200, 724},   // 710-735
    {29, 1280, 724},  // 710-736
    {30, 400, 723},   // 738-711
    {33, 400, 723},   // 711-741
    {33, 200, 724},   // 711-740
};
constexpr int kPrimaryEdgeCount = static_cast<int>(std::size(kIeee37Edges));

// Per-mile (r, x) of the IEEE-37 underground cable configurations.
struct ConfigZ {
  double r_per_mile;
  double x_per_mile;
};

ConfigZ config_impedance(int config) {
  switch (config) {
    case 721: return {0.2926, 0.1973};
    case 722: return {0.4751, 0.2973};
    case 723: return {1.2936, 0.6713};
    case 724: return {2.0952, 0.7758};
  }
  throw std::logic_error("unknown line configuration");
}

}  // namespace

NetworkTopology build_paper_grid(const GridConfig& config) {
  if (config.neighborhoods <= 0 || config.transformers_per_neighborhood <= 0 ||
      config.houses_per_inner_node <= 0) {
    throw std::invalid_argument("grid config counts must be positive");
  }
  if (config.substation_rating_kva <= 0 || config.primary_voltage_v <= 0 ||
      config.secondary_voltage_v <= 0 || config.substation_voltage_pu <= 0) {
    throw std::invalid_argument("grid config bases must be positive");
  }
  if (config.transformer_r_ohm < 0 || config.transformer_x_ohm < 0 ||
      (config.transformer_r_ohm == 0 && config.transformer_x_ohm == 0)) {
    throw std::invalid_argument("transformer impedance must be non-negative and not both zero");
  }
  if (config.service_drop_r_ohm < 0 || config.service_drop_x_ohm < 0 ||
      (config.service_drop_r_ohm == 0 && config.service_drop_x_ohm == 0)) {
    throw std::invalid_argument("service drop impedance must be non-negative and not both zero");
  }
  if (config.primary_impedance_scale <= 0) {
    throw std::invalid_argument("primary impedance scale must be positive");
  }

  std::vector<Bus> buses;
  std::vector<LineSegment> lines;

  buses.push_back({0, BusKind::SubstationRoot, config.primary_voltage_v});

  // Primary: BFS prefix of the IEEE-37 layout large enough to host the
  // neighborhoods; attachment points cycle over the non-root buses.
  int attach_slots = std::min(config.neighborhoods, kPrimaryEdgeCount);
  std::vector<BusId> primary_ids(static_cast<std::size_t>(attach_slots) + 1);
  primary_ids[0] = 0;
  for (int i = 0; i < attach_slots; ++i) {
    const PrimaryEdge& e = kIeee37Edges[i];
    BusId id = static_cast<BusId>(buses.size());
    primary_ids[static_cast<std::size_t>(i) + 1] = id;
    buses.push_back({id, BusKind::PrimaryJunction, config.primary_voltage_v});
    ConfigZ z = config_impedance(e.config);
    double miles = e.length_ft / 5280.0;
    lines.push_back({primary_ids[static_cast<std::size_t>(e.parent)], id,
                     z.r_per_mile * miles * config.primary_impedance_scale,
                     z.x_per_mile * miles * config.primary_impedance_scale, 0.0});
  }

  for (int n = 0; n < config.neighborhoods; ++n) {
    BusId attach = primary_ids[static_cast<std::size_t>(n % attach_slots) + 1];
    for (int t = 0; t < config.transformers_per_neighborhood; ++t) {
      BusId inner = static_cast<BusId>(buses.size());
      buses.push_back({inner, BusKind::TransformerSecondary, config.secondary_voltage_v});
      lines.push_back({attach, inner, config.transformer_r_ohm, config.transformer_x_ohm,
                       config.transformer_rating_kva});
      for (int h = 0; h < config.houses_per_inner_node; ++h) {
        BusId load = static_cast<BusId>(buses.size());
        buses.push_back({load, BusKind::HouseLoad, config.secondary_voltage_v});
        lines.push_back({inner, load, config.service_drop_r_ohm, config.service_drop_x_ohm, 0.0});
        BusId ev = static_cast<BusId>(buses.size());
        buses.push_back({ev, BusKind::HouseEv, config.secondary_voltage_v});
        lines.push_back({inner, ev, config.service_drop_r_ohm, config.service_drop_x_ohm, 0.0});
      }
    }
  }

  return NetworkTopology(std::move(buses), std::move(lines), 0, config.substation_rating_kva,
                         config.primary_voltage_v, config.secondary_voltage_v,
                         config.substation_voltage_pu);
}

std::optional<RadialViolation> validate_radial(const NetworkTopology& topology) {
  const auto& buses = topology.buses();
  const auto& lines = topology.lines();

  int roots = 0;
  for (const Bus& b : buses)
    if (b.kind == BusKind::SubstationRoot) ++roots;
  if (roots != 1) {
    return RadialViolation{"root", "expected exactly one substation-root bus, found " +
                                       std::to_string(roots)};
  }
  if (!topology.has_bus(topology.root()) ||
      topology.bus(topology.root()).kind != BusKind::SubstationRoot) {
    return RadialViolation{"root", "root id does not name the substation-root bus"};
  }

  // A bus with two incoming segments closes a loop through its parents.
  std::unordered_map<BusId, int> incoming;
  for (const LineSegment& l : lines) {
    if (!topology.has_bus(l.from_bus) || !topology.has_bus(l.to_bus)) {
      return RadialViolation{"disconnected",
                             "line references unknown bus " +
                                 std::to_string(topology.has_bus(l.from_bus) ? l.to_bus : l.from_bus)};
    }
    if (++incoming[l.to_bus] > 1) {
      return RadialViolation{"cycle", "bus " + std::to_string(l.to_bus) + " has multiple parents"};
    }
    if (l.to_bus == topology.root()) {
      return RadialViolation{"cycle", "root bus has an incoming segment"};
    }
  }

  std::unordered_map<BusId, std::vector<const LineSegment*>> children;
  for (const LineSegment& l : lines) children[l.from_bus].push_back(&l);

  std::unordered_map<BusId, bool> reached;
  std::queue<BusId> frontier;
  frontier.push(topology.root());
  reached[topology.root()] = true;
  std::size_t seen = 1;
  while (!frontier.empty()) {
    BusId u = frontier.front();
    frontier.pop();
    auto it = children.find(u);
    if (it == children.end()) continue;
    for (const LineSegment* l : it->second) {
      if (reached[l->to_bus]) {
        return RadialViolation{"cycle", "bus " + std::to_string(l->to_bus) + " reached twice"};
      }
      reached[l->to_bus] = true;
      ++seen;
      frontier.push(l->to_bus);
    }
  }
  if (seen != buses.size()) {
    for (const Bus& b : buses) {
      if (!reached[b.id]) {
        return RadialViolation{"disconnected",
                               "bus " + std::to_string(b.id) + " is not reachable from the root"};
      }
    }
  }
  if (lines.size() != buses.size() - 1) {
    return RadialViolation{"count", "expected |lines| = |buses| - 1"};
  }

  for (const Bus& b : buses) {
    bool is_leaf = children.find(b.id) == children.end();
    bool is_house = b.kind == BusKind::HouseLoad || b.kind == BusKind::HouseEv;
    if (is_house && !is_leaf) {
      return RadialViolation{"leaf-kind", "house bus " + std::to_string(b.id) + " is not a leaf"};
    }
  }

  for (const LineSegment& l : lines) {
    if (l.resistance_ohm < 0 || l.reactance_ohm < 0 ||
        (l.resistance_ohm == 0 && l.reactance_ohm == 0)) {
      return RadialViolation{"impedance", "segment " + std::to_string(l.from_bus) + "->" +
                                              std::to_string(l.to_bus) + " has invalid impedance"};
    }
  }
  if (topology.substation_rating_kva() <= 0 || topology.base_voltage_primary_v() <= 0 ||
      topology.base_voltage_secondary_v() <= 0 || topology.substation_voltage_pu() <= 0) {
    return RadialViolation{"base", "per-unit bases must be positive"};
  }
  return std::nullopt;
}

std::vector<LineSegment> path_to_root(const NetworkTopology& topology, BusId bus) {
  if (!topology.has_bus(bus)) throw std::out_of_range("unknown bus id " + std::to_string(bus));
  std::unordered_map<BusId, const LineSegment*> parent_edge;
  parent_edge.reserve(topology.lines().size());
  for (const LineSegment& l : topology.lines()) parent_edge[l.to_bus] = &l;

  std::vector<LineSegment> path;
  BusId cursor = bus;
  while (cursor != topology.root()) {
    auto it = parent_edge.find(cursor);
    if (it == parent_edge.end()) {
      throw std::runtime_error("bus " + std::to_string(bus) + " has no path to the root");
    }
    path.push_back(*it->second);
    cursor = it->second->from_bus;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::string serialize_topology(const NetworkTopology& topology) {
  std::ostringstream out;
  char buf[256];
  out << "gridaimd-topology v1\n";
  std::snprintf(buf, sizeof buf, "base %.17g %.17g %.17g %.17g\n", topology.substation_rating_kva(),
                topology.base_voltage_primary_v(), topology.base_voltage_secondary_v(),
                topology.substation_voltage_pu());
  out << buf;
  out << "root " << topology.root() << "\n";

  std::vector<Bus> buses = topology.buses();
  std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
  for (const Bus& b : buses) {
    std::snprintf(buf, sizeof buf, "bus %d %s %.17g\n", b.id, to_string(b.kind).c_str(),
                  b.nominal_voltage_v);
    out << buf;
  }
  std::vector<LineSegment> lines = topology.lines();
  std::sort(lines.begin(), lines.end(), [](const LineSegment& a, const LineSegment& b) {
    return a.to_bus != b.to_bus ? a.to_bus < b.to_bus : a.from_bus < b.from_bus;
  });
  for (const LineSegment& l : lines) {
    std::snprintf(buf, sizeof buf, "line %d %d %.17g %.17g %.17g\n", l.from_bus, l.to_bus,
                  l.resistance_ohm, l.reactance_ohm, l.rating_kva);
    out << buf;
  }
  return out.str();
}

NetworkTopology parse_topology(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  auto fail = [&](const std::string& why) {
    throw std::runtime_error("topology line " + std::to_string(line_no) + ": " + why);
  };

  if (!std::getline(in, line)) throw std::runtime_error("empty topology file");
  ++line_no;
  if (line != "gridaimd-topology v1") throw std::runtime_error("not a gridaimd topology file");

  std::vector<Bus> buses;
  std::vector<LineSegment> lines;
  BusId root = -1;
  double rating = 0, vprim = 0, vsec = 0, v0 = 0;
  bool have_base = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "base") {
      if (!(ls >> rating >> vprim >> vsec >> v0)) fail("malformed base record");
      have_base = true;
    } else if (tag == "root") {
      if (!(ls >> root)) fail("malformed root record");
    } else if (tag == "bus") {
      Bus b;
      std::string kind;
      if (!(ls >> b.id >> kind >> b.nominal_voltage_v)) fail("malformed bus record");
      auto k = bus_kind_from_string(kind);
      if (!k) fail("unknown bus kind '" + kind + "'");
      b.kind = *k;
      buses.push_back(b);
    } else if (tag == "line") {
      LineSegment l;
      if (!(ls >> l.from_bus >> l.to_bus >> l.resistance_ohm >> l.reactance_ohm)) {
        fail("malformed line record");
      }
      if (!(ls >> l.rating_kva)) l.rating_kva = 0.0;
      lines.push_back(l);
    } else {
      fail("unknown record tag '" + tag + "'");
    }
  }
  if (!have_base) throw std::runtime_error("topology file missing base record");
  if (root < 0) throw std::runtime_error("topology file missing root record");
  return NetworkTopology(std::move(buses), std::move(lines), root, rating, vprim, vsec, v0);
}

void save_topology(const NetworkTopology& topology, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << serialize_topology(topology);
}

NetworkTopology load_topology(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open topology file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_topology(ss.str());
}

}  // namespace gridaimd
