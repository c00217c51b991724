#include "chakra/sim/topology.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace chakra {
namespace {

struct Link {
  double bw;
  double lat;
};

Link link(const Topology& topo, int dim) {
  return dim == 1 ? Link{topo.bw1, topo.lat1} : Link{topo.bw2, topo.lat2};
}

double ring_time(CommType type, double bytes, uint32_t n, Link l) {
  if (n <= 1) return 0.0;
  const double steps = static_cast<double>(n - 1);
  const double chunk = bytes / (static_cast<double>(n) * l.bw);
  switch (type) {
    case CommType::kAllReduce:
      return 2.0 * steps * chunk + 2.0 * steps * l.lat;
    case CommType::kAllGather:
    case CommType::kReduceScatter:
      return steps * chunk + steps * l.lat;
    case CommType::kAllToAll:
      return steps * chunk + l.lat;
    case CommType::kSend:
    case CommType::kRecv:
      return bytes / l.bw + l.lat;
  }
  throw CostModelError("unknown collective type");
}

double hierarchical_time(CommType type, double bytes, uint32_t n1, uint32_t n2,
                         const Topology& topo) {
  const Link l1 = link(topo, 1);
  const Link l2 = link(topo, 2);
  const double inner = bytes / n1;
  switch (type) {
    case CommType::kAllReduce:
      return ring_time(CommType::kReduceScatter, bytes, n1, l1) +
             ring_time(CommType::kAllReduce, inner, n2, l2) +
             ring_time(CommType::kAllGather, bytes, n1, l1);
    case CommType::kReduceScatter:
      return ring_time(CommType::kReduceScatter, bytes, n1, l1) +
             ring_time(CommType::kReduceScatter, inner, n2, l2);
    case CommType::kAllGather:
      return ring_time(CommType::kAllGather, inner, n2, l2) +
             ring_time(CommType::kAllGather, bytes, n1, l1);
    case CommType::kAllToAll:
      return ring_time(CommType::kAllToAll, bytes, n1, l1) +
             ring_time(CommType::kAllToAll, bytes, n2, l2);
    case CommType::kSend:
    case CommType::kRecv:
      break;
  }
  throw CostModelError("point-to-point transfers have no hierarchical form");
}

uint32_t parse_u32(std::string_view s, std::string_view what) {
  uint32_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw TopologyError("malformed " + std::string(what) + " '" +
                        std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(TopologyKind kind) {
  return kind == TopologyKind::kTorus2D ? "torus2d" : "switch2lvl";
}

std::string Topology::describe() const {
  std::ostringstream out;
  out << to_string(kind) << ':' << d1 << 'x' << d2;
  return out.str();
}

void check_topology(const Topology& topo) {
  if (topo.d1 < 1 || topo.d2 < 1) {
    throw TopologyError("topology dims must be >= 1");
  }
  if (!(topo.bw1 > 0.0) || !(topo.bw2 > 0.0)) {
    throw TopologyError("topology bandwidths must be > 0");
  }
  if (topo.lat1 < 0.0 || topo.lat2 < 0.0) {
    throw TopologyError("topology latencies must be >= 0");
  }
}

Topology parse_topology(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw TopologyError("topology must look like torus2d:<d1>x<d2>");
  }
  Topology topo;
  auto kind = spec.substr(0, colon);
  if (kind == "torus2d") {
    topo.kind = TopologyKind::kTorus2D;
  } else if (kind == "switch2lvl") {
    topo.kind = TopologyKind::kSwitch2Lvl;
  } else {
    throw TopologyError("unknown topology kind '" + std::string(kind) + "'");
  }
  auto dims = spec.substr(colon + 1);
  auto x = dims.find('x');
  if (x == std::string_view::npos) {
    throw TopologyError("topology dims must look like <d1>x<d2>");
  }
  topo.d1 = parse_u32(dims.substr(0, x), "dimension");
  topo.d2 = parse_u32(dims.substr(x + 1), "dimension");
  check_topology(topo);
  return topo;
}

std::pair<double, double> parse_pair(std::string_view text) {
  auto comma = text.find(',');
  if (comma == std::string_view::npos) {
    throw TopologyError("expected two comma-separated values, got '" +
                        std::string(text) + "'");
  }
  auto parse = [&](std::string_view s) {
    std::string str(s);
    size_t used = 0;
    double v = 0;
    try {
      v = std::stod(str, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != str.size() || str.empty()) {
      throw TopologyError("malformed number '" + str + "'");
    }
    return v;
  };
  return {parse(text.substr(0, comma)), parse(text.substr(comma + 1))};
}

std::pair<uint32_t, uint32_t> square_dims(uint32_t npus) {
  uint32_t d1 = 1;
  for (uint32_t d = 1; static_cast<uint64_t>(d) * d <= npus; ++d) {
    if (npus % d == 0) d1 = d;
  }
  return {d1, npus / d1};
}

double collective_time(CommType type, double bytes, uint32_t group_size,
                       CommDim dim, const Topology& topo) {
  if (group_size < 1) throw CostModelError("group size must be >= 1");
  if (bytes < 0) throw CostModelError("message size must be >= 0");
  if (group_size == 1) return 0.0;
  switch (dim) {
    case CommDim::kDim1: return ring_time(type, bytes, group_size, link(topo, 1));
    case CommDim::kDim2: return ring_time(type, bytes, group_size, link(topo, 2));
    case CommDim::kHierarchical:
      if (group_size % topo.d1 != 0) {
        throw CostModelError("hierarchical group of " +
                             std::to_string(group_size) +
                             " ranks does not tile dimension 1 of size " +
                             std::to_string(topo.d1));
      }
      return hierarchical_time(type, bytes, topo.d1, group_size / topo.d1,
                               topo);
  }
  throw CostModelError("unknown dimension");
}

double collective_time(CommType type, double bytes, GroupShape shape,
                       const Topology& topo) {
  if (shape.n1 < 1 || shape.n2 < 1) {
    throw CostModelError("group shape must be >= 1 in both dimensions");
  }
  if (bytes < 0) throw CostModelError("message size must be >= 0");
  if (shape.size() == 1) return 0.0;
  if (shape.n2 == 1) return ring_time(type, bytes, shape.n1, link(topo, 1));
  if (shape.n1 == 1) return ring_time(type, bytes, shape.n2, link(topo, 2));
  return hierarchical_time(type, bytes, shape.n1, shape.n2, topo);
}

double p2p_time(double bytes, uint32_t src, uint32_t dst,
                const Topology& topo) {
  if (bytes < 0) throw CostModelError("message size must be >= 0");
  if (src == dst) return 0.0;
  double t = 0.0;
  if (topo.coord1(src) != topo.coord1(dst)) {
    t += ring_time(CommType::kSend, bytes, 2, link(topo, 1));
  }
  if (topo.coord2(src) != topo.coord2(dst)) {
    t += ring_time(CommType::kSend, bytes, 2, link(topo, 2));
  }
  return t;
}

GroupPlacement place_group(std::span<const uint32_t> ranks,
                           const Topology& topo) {
  std::set<uint32_t> c1;
  std::set<uint32_t> c2;
  for (uint32_t r : ranks) {
    c1.insert(topo.coord1(r));
    c2.insert(topo.coord2(r));
  }
  GroupPlacement p;
  p.shape = {static_cast<uint32_t>(std::max<size_t>(c1.size(), 1)),
             static_cast<uint32_t>(std::max<size_t>(c2.size(), 1))};
  if (p.shape.size() != ranks.size()) {
    p.regular = false;
    p.shape = {static_cast<uint32_t>(ranks.size()), 1};
  }
  return p;
}

double group_collective_time(CommType type, double bytes,
                             const GroupPlacement& placement,
                             const Topology& topo) {
  if (placement.regular) {
    return collective_time(type, bytes, placement.shape, topo);
  }
  // Flat ring over the slower dimension.
  Topology slow = topo;
  if (topo.bw2 < topo.bw1) {
    slow.bw1 = topo.bw2;
  }
  slow.lat1 = std::max(topo.lat1, topo.lat2);
  return collective_time(type, bytes, placement.shape.size(), CommDim::kDim1,
                         slow);
}

}  // namespace chakra
