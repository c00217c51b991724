#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "chakra/core/types.h"

namespace chakra {

enum class TopologyKind { kTorus2D, kSwitch2Lvl };

std::string_view to_string(TopologyKind kind);

// Two-dimensional network. Rank r sits at (r % d1, r / d1); ranks that share
// r / d1 communicate over dimension 1, ranks that share r % d1 over
// dimension 2.
struct Topology {
  TopologyKind kind = TopologyKind::kTorus2D;
  uint32_t d1 = 1;
  uint32_t d2 = 1;
  double bw1 = 62e9;  // bytes/s
  double bw2 = 62e9;
  double lat1 = 0.0;  // seconds per transfer step
  double lat2 = 0.0;

  uint32_t npus() const { return d1 * d2; }
  uint32_t coord1(uint32_t rank) const { return rank % d1; }
  uint32_t coord2(uint32_t rank) const { return rank / d1; }
  std::string describe() const;
};

class TopologyError : public Error {
 public:
  using Error::Error;
};

// Throws TopologyError unless dims >= 1 and bandwidths > 0.
void check_topology(const Topology& topo);

// "torus2d:<d1>x<d2>" or "switch2lvl:<d1>x<d2>". Bandwidth and latency keep
// their defaults.
Topology parse_topology(std::string_view spec);
std::pair<double, double> parse_pair(std::string_view text);

// Most square d1 x d2 factorization with d1 <= d2.
std::pair<uint32_t, uint32_t> square_dims(uint32_t npus);

enum class CommDim { kDim1, kDim2, kHierarchical };

// Extent of a communicator along each dimension: n1 ranks along dimension 1
// times n2 along dimension 2.
struct GroupShape {
  uint32_t n1 = 1;
  uint32_t n2 = 1;
  uint32_t size() const { return n1 * n2; }
};

class CostModelError : public Error {
 public:
  using Error::Error;
};

// Closed-form collective cost in seconds.
//
// On one dimension with bandwidth B and latency L over N ranks:
//   ALL_REDUCE                  2(N-1) * S/(N B) + 2(N-1) L
//   ALL_GATHER, REDUCE_SCATTER   (N-1) * S/(N B) +  (N-1) L
//   ALL_TO_ALL                   (N-1) * S/(N B) +        L
//   SEND, RECV                           S/B     +        L
// N = 1 costs nothing. kHierarchical spans both dimensions with
// n1 = topo.d1 and n2 = N / topo.d1 and composes per-dimension phases:
//   ALL_REDUCE      RS dim1 (S) + AR dim2 (S / n1) + AG dim1 (S)
//   REDUCE_SCATTER  RS dim1 (S) + RS dim2 (S / n1)
//   ALL_GATHER      AG dim2 (S / n1) + AG dim1 (S)
//   ALL_TO_ALL      A2A dim1 (S) + A2A dim2 (S)
double collective_time(CommType type, double bytes, uint32_t group_size,
                       CommDim dim, const Topology& topo);

// Same model, dimension chosen from the group's shape: n2 == 1 runs on
// dimension 1, n1 == 1 on dimension 2, anything else hierarchically.
double collective_time(CommType type, double bytes, GroupShape shape,
                       const Topology& topo);

// Point-to-point transfer between two ranks. Ranks differing in both
// coordinates pay one hop on each dimension.
double p2p_time(double bytes, uint32_t src, uint32_t dst, const Topology& topo);

// Shape of the communicator formed by `ranks` (sorted, unique). Members that
// do not form a full sub-grid are treated as a flat ring on the slower
// dimension; `regular` reports which case applied.
struct GroupPlacement {
  GroupShape shape;
  bool regular = true;
};
GroupPlacement place_group(std::span<const uint32_t> ranks,
                           const Topology& topo);

// Cost for a group placement, including the irregular fallback.
double group_collective_time(CommType type, double bytes,
                             const GroupPlacement& placement,
                             const Topology& topo);

}  // namespace chakra
