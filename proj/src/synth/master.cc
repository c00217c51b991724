#include "chakra/synth/master.h"

#include <algorithm>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "chakra/core/validate.h"
#include "chakra/gen/builder.h"

namespace chakra {

std::vector<uint32_t> MasterOp::participants() const {
  std::vector<uint32_t> out;
  out.reserve(sizes.size());
  for (const auto& [rank, bytes] : sizes) out.push_back(rank);
  return out;
}

std::vector<CommOp> comm_sequence(const Trace& trace) {
  require_valid(trace, "comm_sequence");
  std::unordered_map<uint64_t, size_t> index;
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    index.emplace(trace.nodes[i].id, i);
  }
  std::vector<size_t> indegree(trace.nodes.size(), 0);
  std::vector<std::vector<size_t>> children(trace.nodes.size());
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    std::vector<uint64_t> parents = trace.nodes[i].parents;
    std::sort(parents.begin(), parents.end());
    parents.erase(std::unique(parents.begin(), parents.end()), parents.end());
    for (uint64_t p : parents) {
      children[index.at(p)].push_back(i);
      ++indegree[i];
    }
  }
  using Item = std::pair<uint64_t, size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
  for (size_t i = 0; i < trace.nodes.size(); ++i) {
    if (indegree[i] == 0) ready.emplace(trace.nodes[i].id, i);
  }
  std::vector<CommOp> out;
  while (!ready.empty()) {
    const size_t i = ready.top().second;
    ready.pop();
    const ETNode& n = trace.nodes[i];
    if (n.type == NodeType::kCommColl) {
      out.push_back(CommOp{n.name, *get_comm_type(n),
                           std::string(*get_string(n, attr::kCommGroup)),
                           *get_int(n, attr::kCommSize)});
    }
    for (size_t c : children[i]) {
      if (--indegree[c] == 0) ready.emplace(trace.nodes[c].id, c);
    }
  }
  return out;
}

namespace {

std::string describe(const CommOp& op) {
  return "'" + op.name + "' (" + std::string(to_string(op.type)) + ")";
}

}  // namespace

MasterTrace build_master_trace(std::span<const Trace> traces) {
  const auto npus = static_cast<uint32_t>(traces.size());
  std::vector<std::vector<CommOp>> seqs(npus);
  std::vector<bool> seen(npus, false);
  for (const auto& t : traces) {
    if (t.npu_id >= npus || seen[t.npu_id]) {
      throw Error("build_master_trace: npu ids must be unique and below " +
                  std::to_string(npus) + ", got " + std::to_string(t.npu_id));
    }
    seen[t.npu_id] = true;
    seqs[t.npu_id] = comm_sequence(t);
  }

  // Groups in order of first appearance, and each rank's ops per group.
  std::vector<std::string> groups;
  std::unordered_map<std::string, size_t> group_index;
  // per_rank[r][g] = positions in seqs[r] of rank r's ops in group g
  std::vector<std::unordered_map<size_t, std::vector<size_t>>> per_rank(npus);
  for (uint32_t r = 0; r < npus; ++r) {
    for (size_t pos = 0; pos < seqs[r].size(); ++pos) {
      const std::string& g = seqs[r][pos].group;
      auto [it, fresh] = group_index.emplace(g, groups.size());
      if (fresh) groups.push_back(g);
      per_rank[r][it->second].push_back(pos);
    }
  }

  struct Node {
    size_t group;
    size_t k;
    MasterOp op;
    size_t earliest = SIZE_MAX;
    size_t indegree = 0;
    std::vector<size_t> next;
  };
  std::vector<Node> nodes;
  // node_of[r][pos] = master node of rank r's pos-th collective
  std::vector<std::vector<size_t>> node_of(npus);
  for (uint32_t r = 0; r < npus; ++r) node_of[r].resize(seqs[r].size());

  for (size_t g = 0; g < groups.size(); ++g) {
    std::vector<uint32_t> members;
    for (uint32_t r = 0; r < npus; ++r) {
      if (per_rank[r].count(g)) members.push_back(r);
    }
    const uint32_t first = members.front();
    const auto& ref = per_rank[first].at(g);
    for (uint32_t r : members) {
      const auto& mine = per_rank[r].at(g);
      if (mine.size() != ref.size()) {
        throw MasterTraceError(
            groups[g], "group " + groups[g] + ": rank " +
                           std::to_string(first) + " issues " +
                           std::to_string(ref.size()) + " collectives but rank " +
                           std::to_string(r) + " issues " +
                           std::to_string(mine.size()));
      }
    }
    for (size_t k = 0; k < ref.size(); ++k) {
      const CommOp& want = seqs[first][ref[k]];
      Node node{g, k, {}, SIZE_MAX, 0, {}};
      node.op.name = want.name;
      node.op.type = want.type;
      node.op.group = want.group;
      for (uint32_t r : members) {
        const size_t pos = per_rank[r].at(g)[k];
        const CommOp& got = seqs[r][pos];
        if (got.name != want.name || got.type != want.type) {
          throw MasterTraceError(
              groups[g], "group " + groups[g] + ": collective #" +
                             std::to_string(k) + " is " + describe(want) +
                             " on rank " + std::to_string(first) + " but " +
                             describe(got) + " on rank " + std::to_string(r));
        }
        node.op.sizes[r] = got.bytes;
        node.earliest = std::min(node.earliest, pos);
        node_of[r][pos] = nodes.size();
      }
      nodes.push_back(std::move(node));
    }
  }

  for (uint32_t r = 0; r < npus; ++r) {
    for (size_t pos = 1; pos < seqs[r].size(); ++pos) {
      nodes[node_of[r][pos - 1]].next.push_back(node_of[r][pos]);
      ++nodes[node_of[r][pos]].indegree;
    }
  }

  using Key = std::tuple<size_t, size_t, size_t, size_t>;
  std::priority_queue<Key, std::vector<Key>, std::greater<>> ready;
  auto push = [&](size_t i) {
    ready.emplace(nodes[i].earliest, nodes[i].group, nodes[i].k, i);
  };
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].indegree == 0) push(i);
  }
  MasterTrace master;
  master.npus = npus;
  while (!ready.empty()) {
    const size_t i = std::get<3>(ready.top());
    ready.pop();
    nodes[i].op.seq_no = master.ops.size();
    master.ops.push_back(nodes[i].op);
    for (size_t c : nodes[i].next) {
      if (--nodes[c].indegree == 0) push(c);
    }
  }
  if (master.ops.size() != nodes.size()) {
    // Ranks disagree on how collectives of different groups interleave.
    std::vector<std::string> stuck;
    for (const auto& n : nodes) {
      if (n.indegree > 0) {
        stuck.push_back(groups[n.group] + " '" + n.op.name + "'");
      }
    }
    auto first_stuck = std::find_if(nodes.begin(), nodes.end(),
                                    [](const Node& n) { return n.indegree > 0; });
    const std::string& group = groups[first_stuck->group];
    std::string msg = "group " + group +
                      ": ranks order collectives inconsistently; cyclic "
                      "constraints among";
    for (size_t i = 0; i < stuck.size() && i < 4; ++i) msg += " " + stuck[i];
    if (stuck.size() > 4) msg += " ...";
    throw MasterTraceError(group, msg);
  }
  return master;
}

std::vector<Trace> reconstruct_rank_traces(const MasterTrace& master,
                                           uint32_t npus) {
  std::vector<Trace> traces(npus);
  for (uint32_t r = 0; r < npus; ++r) traces[r].npu_id = r;
  for (const auto& op : master.ops) {
    for (const auto& [rank, bytes] : op.sizes) {
      if (rank >= npus) {
        throw MasterTraceError(op.group, "group " + op.group + ": rank " +
                                             std::to_string(rank) +
                                             " is outside " +
                                             std::to_string(npus) + " npus");
      }
      Trace& t = traces[rank];
      ETNode n;
      n.id = t.nodes.size() + 1;
      n.name = op.name;
      n.type = NodeType::kCommColl;
      if (!t.nodes.empty()) n.parents = {t.nodes.back().id};
      n.attributes = coll_attrs(op.type, bytes, op.group);
      t.nodes.push_back(std::move(n));
    }
  }
  return traces;
}

}  // namespace chakra
