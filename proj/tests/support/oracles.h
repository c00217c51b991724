#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "chakra/feeder/feeder.h"
#include "chakra/sim/topology.h"

namespace chakra::testing {

using Order = std::vector<uint64_t>;

// Brute force: every permutation that puts parents first.
inline std::set<Order> all_topological_orders(const Trace& t) {
  Order ids;
  for (const auto& n : t.nodes) ids.push_back(n.id);
  std::sort(ids.begin(), ids.end());
  std::set<Order> out;
  do {
    std::map<uint64_t, size_t> pos;
    for (size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = i;
    bool ok = true;
    for (const auto& n : t.nodes) {
      for (uint64_t p : n.parents) ok = ok && pos[p] < pos[n.id];
    }
    if (ok) out.insert(ids);
  } while (std::next_permutation(ids.begin(), ids.end()));
  return out;
}

inline bool is_topological(const Trace& t, const Order& order) {
  if (order.size() != t.nodes.size()) return false;
  std::map<uint64_t, size_t> pos;
  for (size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
  if (pos.size() != order.size()) return false;
  for (const auto& n : t.nodes) {
    if (!pos.count(n.id)) return false;
    for (uint64_t p : n.parents) {
      if (pos.at(p) >= pos.at(n.id)) return false;
    }
  }
  return true;
}

// Every completion order the feeder admits when all issuable nodes are
// issued eagerly and any in-flight node may complete next.
inline void explore_feeder(Feeder f, std::vector<uint64_t> in_flight, Order done,
                           std::set<Order>& out) {
  while (const ETNode* n = f.get_next_issuable_node()) in_flight.push_back(n->id);
  if (in_flight.empty()) {
    if (f.done()) out.insert(done);
    return;
  }
  for (size_t i = 0; i < in_flight.size(); ++i) {
    Feeder g = f;
    auto rest = in_flight;
    const uint64_t id = rest[i];
    rest.erase(rest.begin() + i);
    g.free_children_nodes(id);
    auto next = done;
    next.push_back(id);
    explore_feeder(std::move(g), std::move(rest), std::move(next), out);
  }
}

inline std::set<Order> feeder_orders(const Trace& t) {
  std::set<Order> out;
  explore_feeder(Feeder(t), {}, {}, out);
  return out;
}

// Step-by-step ring schedule: every step moves one S/N chunk across a link
// and pays the link latency, except ALL_TO_ALL, whose N-1 chunks stream
// back to back behind a single latency.
inline double ring_oracle(CommType type, double bytes, uint32_t n, double bw,
                          double lat) {
  if (n <= 1) return 0.0;
  const double chunk = bytes / n;
  double t = 0.0;
  auto phase = [&](uint32_t steps) {
    for (uint32_t s = 0; s < steps; ++s) t += chunk / bw + lat;
  };
  switch (type) {
    case CommType::kAllReduce:
      phase(n - 1);  // reduce-scatter
      phase(n - 1);  // all-gather
      break;
    case CommType::kAllGather:
    case CommType::kReduceScatter:
      phase(n - 1);
      break;
    case CommType::kAllToAll:
      for (uint32_t s = 0; s < n - 1; ++s) t += chunk / bw;
      t += lat;
      break;
    default:
      t = bytes / bw + lat;
  }
  return t;
}

}  // namespace chakra::testing
