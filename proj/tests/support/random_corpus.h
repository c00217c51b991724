#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chakra/gen/builder.h"
#include "chakra/synth/master.h"

namespace chakra::testing {

// Rank traces that are mergeable by construction: a hidden global order of
// collectives is projected onto each rank, with compute nodes interleaved.
struct RandomCorpus {
  std::vector<Trace> traces;
  std::vector<std::vector<CommOp>> sequences;  // expected, per rank
};

inline RandomCorpus random_mergeable_corpus(std::mt19937_64& rng,
                                            uint32_t npus, size_t max_ops) {
  // World plus a few random sub-communicators of at least two ranks.
  std::vector<std::pair<std::string, std::vector<uint32_t>>> groups;
  std::vector<uint32_t> world(npus);
  for (uint32_t r = 0; r < npus; ++r) world[r] = r;
  groups.emplace_back("world", world);
  const int extra = std::uniform_int_distribution<int>(0, 4)(rng);
  for (int g = 0; g < extra && npus > 2; ++g) {
    std::vector<uint32_t> members;
    while (members.size() < 2) {
      members.clear();
      for (uint32_t r = 0; r < npus; ++r) {
        if (std::bernoulli_distribution(0.4)(rng)) members.push_back(r);
      }
    }
    groups.emplace_back("g" + std::to_string(g), members);
  }

  const size_t ops = std::uniform_int_distribution<size_t>(1, max_ops)(rng);
  RandomCorpus c;
  c.sequences.resize(npus);
  std::uniform_int_distribution<size_t> pick_group(0, groups.size() - 1);
  std::uniform_int_distribution<int> pick_type(0, 3);
  std::uniform_int_distribution<int64_t> size(0, 1 << 24);
  for (size_t i = 0; i < ops; ++i) {
    const auto& [name, members] = groups[pick_group(rng)];
    const CommType type = kCollectiveTypes[pick_type(rng)];
    for (uint32_t r : members) {
      c.sequences[r].push_back(CommOp{"op" + std::to_string(i), type, name,
                                      size(rng)});
    }
  }

  for (uint32_t r = 0; r < npus; ++r) {
    TraceBuilder b(r);
    std::optional<NodeHandle> prev;
    auto chain = [&](NodeHandle h) {
      if (prev) b.assign_dep(*prev, h);
      prev = h;
    };
    for (const auto& op : c.sequences[r]) {
      if (std::bernoulli_distribution(0.3)(rng)) {
        chain(b.add_node(NodeType::kComp, "work", comp_attrs(5)));
      }
      chain(b.add_node(NodeType::kCommColl, op.name,
                       coll_attrs(op.type, op.bytes, op.group)));
    }
    c.traces.push_back(b.finalize());
  }
  return c;
}

}  // namespace chakra::testing
