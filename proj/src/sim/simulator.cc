#include "chakra/sim/simulator.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "chakra/core/validate.h"
#include "chakra/feeder/feeder.h"

namespace chakra {
namespace {

enum Resource : int { kMemory = 0, kCompute = 1, kNetwork = 2, kResources = 3 };

Resource resource_of(NodeType type) {
  if (is_memory(type)) return kMemory;
  if (type == NodeType::kComp) return kCompute;
  return kNetwork;
}

// A rendezvous: a collective instance or one SEND/RECV pair.
struct Rendezvous {
  std::string label;
  bool collective = true;
  CommType type = CommType::kAllReduce;
  std::vector<uint32_t> members;  // sorted
  std::vector<std::pair<uint32_t, const ETNode*>> arrived;
  double bytes = 0;
  bool started = false;
};

struct Slot {
  const ETNode* node = nullptr;
  uint64_t issue = 0;
};

struct Npu {
  std::unique_ptr<Feeder> feeder;
  std::deque<const ETNode*> waiting[kResources];
  Slot slot[kResources];
  std::unordered_map<uint64_t, size_t> rendezvous;  // node id -> index
};

struct Event {
  uint64_t time;
  uint64_t seq;
  uint32_t npu;
  const ETNode* node;
  uint64_t start;
};

struct EventLater {
  bool operator()(const Event& a, const Event& b) const {
    return std::tie(a.time, a.seq) > std::tie(b.time, b.seq);
  }
};

class Engine {
 public:
  Engine(std::span<const Trace> traces, const SimConfig& cfg)
      : cfg_(cfg), traces_(traces), npus_(traces.size()) {
    check_topology(cfg.topology);
    if (!(cfg.cycle_time > 0)) throw SimError("cycle_time must be > 0");
    if (traces.size() > cfg.topology.npus()) {
      throw SimError(std::to_string(traces.size()) +
                     " traces do not fit topology " +
                     cfg.topology.describe());
    }
    for (size_t i = 0; i < traces.size(); ++i) {
      if (traces[i].npu_id != i) {
        throw SimError("trace at index " + std::to_string(i) +
                       " has npu_id " + std::to_string(traces[i].npu_id));
      }
      npus_[i].feeder = std::make_unique<Feeder>(traces[i]);
    }
    result_.npus.resize(traces.size());
    plan_rendezvous();
  }

  SimResult run() {
    issue_all(0);
    while (!events_.empty()) {
      const uint64_t now = events_.top().time;
      while (!events_.empty() && events_.top().time == now) {
        Event e = events_.top();
        events_.pop();
        complete(e);
      }
      issue_all(now);
    }
    check_finished();
    for (const auto& s : result_.npus) {
      result_.makespan_cycles = std::max(result_.makespan_cycles, s.finish);
    }
    auto breakdown = compute_breakdown(result_);
    for (const auto& row : breakdown) {
      result_.npus[row.npu].exposed_comm = row.exposed_comm;
    }
    return std::move(result_);
  }

 private:
  // Assigns every communication node to its rendezvous up front, so matching
  // follows program (id) order regardless of issue timing.
  void plan_rendezvous() {
    std::map<std::string, std::set<uint32_t>> group_members;
    for (uint32_t r = 0; r < npus_.size(); ++r) {
      for (const ETNode* n : all_nodes(r)) {
        if (n->type != NodeType::kCommColl) continue;
        group_members[std::string(*get_string(*n, attr::kCommGroup))].insert(r);
      }
    }
    std::map<std::tuple<std::string, std::string, uint64_t>, size_t> coll_index;
    std::map<std::tuple<uint32_t, uint32_t, int64_t, uint64_t>, size_t> p2p_index;
    for (uint32_t r = 0; r < npus_.size(); ++r) {
      std::map<std::pair<std::string, std::string>, uint64_t> coll_seen;
      std::map<std::tuple<uint32_t, uint32_t, int64_t>, uint64_t> p2p_seen;
      for (const ETNode* n : all_nodes(r)) {
        if (n->type == NodeType::kComp &&
            cfg_.compute_timing == TimingMode::kFromTrace) {
          runtime_of(r, *n);
        }
        if (n->type == NodeType::kCommColl) {
          std::string group(*get_string(*n, attr::kCommGroup));
          uint64_t occ = coll_seen[{group, n->name}]++;
          auto key = std::make_tuple(group, n->name, occ);
          auto it = coll_index.find(key);
          if (it == coll_index.end()) {
            Rendezvous rv;
            rv.label = "collective '" + n->name + "' #" +
                       std::to_string(occ) + " in group " + group;
            rv.type = *get_comm_type(*n);
            const auto& m = group_members.at(group);
            rv.members.assign(m.begin(), m.end());
            it = coll_index.emplace(key, rendezvous_.size()).first;
            rendezvous_.push_back(std::move(rv));
          } else if (rendezvous_[it->second].type != *get_comm_type(*n)) {
            throw SimError("npu " + std::to_string(r) + " node " +
                           std::to_string(n->id) + ": " +
                           rendezvous_[it->second].label +
                           " has a different comm_type on another rank");
          }
          npus_[r].rendezvous[n->id] = it->second;
        } else if (n->type == NodeType::kCommSend ||
                   n->type == NodeType::kCommRecv) {
          const auto peer = static_cast<uint32_t>(*get_int(*n, attr::kCommPeer));
          if (peer >= npus_.size()) {
            throw SimError("npu " + std::to_string(r) + " node " +
                           std::to_string(n->id) + ": comm_peer " +
                           std::to_string(peer) + " has no trace");
          }
          const bool send = n->type == NodeType::kCommSend;
          const uint32_t src = send ? r : peer;
          const uint32_t dst = send ? peer : r;
          const int64_t tag = get_int(*n, attr::kCommTag).value_or(-1);
          uint64_t occ = p2p_seen[{src, dst, tag}]++;
          auto key = std::make_tuple(src, dst, tag, occ);
          auto it = p2p_index.find(key);
          if (it == p2p_index.end()) {
            Rendezvous rv;
            rv.label = "transfer " + std::to_string(src) + "->" +
                       std::to_string(dst) + " tag " + std::to_string(tag) +
                       " #" + std::to_string(occ);
            rv.collective = false;
            rv.type = CommType::kSend;
            rv.members = {std::min(src, dst), std::max(src, dst)};
            if (src == dst) rv.members = {src};
            it = p2p_index.emplace(key, rendezvous_.size()).first;
            rendezvous_.push_back(std::move(rv));
          }
          npus_[r].rendezvous[n->id] = it->second;
        }
      }
    }
    for (auto& rv : rendezvous_) {
      if (!rv.collective) continue;
      for (uint32_t m : rv.members) {
        if (m >= cfg_.topology.npus()) {
          throw SimError(rv.label + ": rank " + std::to_string(m) +
                         " is outside topology " + cfg_.topology.describe());
        }
      }
    }
  }

  // Nodes of rank r in ascending id order.
  std::vector<const ETNode*> all_nodes(uint32_t r) const {
    std::vector<const ETNode*> out;
    out.reserve(traces_[r].nodes.size());
    for (const auto& n : traces_[r].nodes) out.push_back(&n);
    std::sort(out.begin(), out.end(),
              [](const ETNode* a, const ETNode* b) { return a->id < b->id; });
    return out;
  }

  uint64_t duration_of(uint32_t r, const ETNode& n) const {
    switch (n.type) {
      case NodeType::kComp:
        if (cfg_.compute_timing == TimingMode::kFromTrace) {
          return runtime_of(r, n);
        } else {
          auto ops = get_int(n, attr::kNumOps);
          if (ops && cfg_.compute_rate > 0) {
            return seconds_to_cycles(static_cast<double>(*ops) /
                                         cfg_.compute_rate,
                                     cfg_.cycle_time);
          }
          return runtime_of(r, n);
        }
      case NodeType::kMemLoad:
      case NodeType::kMemStore: {
        if (auto rt = get_int(n, attr::kRuntime)) {
          return static_cast<uint64_t>(*rt);
        }
        auto bytes = get_int(n, attr::kTensorSize).value_or(0);
        return seconds_to_cycles(
            static_cast<double>(bytes) / cfg_.memory_bandwidth,
            cfg_.cycle_time);
      }
      default:
        return 0;
    }
  }

  uint64_t runtime_of(uint32_t r, const ETNode& n) const {
    auto rt = get_int(n, attr::kRuntime);
    if (!rt) {
      throw SimError("npu " + std::to_string(r) + " node " +
                     std::to_string(n.id) + " '" + n.name +
                     "' has no runtime attribute");
    }
    return static_cast<uint64_t>(*rt);
  }

  uint64_t comm_duration(const Rendezvous& rv) const {
    if (cfg_.comm_timing == TimingMode::kFromTrace) {
      uint64_t d = 0;
      for (const auto& [r, n] : rv.arrived) d = std::max(d, runtime_of(r, *n));
      return d;
    }
    double seconds = 0;
    if (rv.collective) {
      auto placement = place_group(rv.members, cfg_.topology);
      seconds = group_collective_time(rv.type, rv.bytes, placement,
                                      cfg_.topology);
    } else {
      uint32_t src = 0;
      uint32_t dst = 0;
      for (const auto& [r, n] : rv.arrived) {
        if (n->type == NodeType::kCommSend) {
          src = r;
        } else {
          dst = r;
        }
      }
      seconds = p2p_time(rv.bytes, src, dst, cfg_.topology);
    }
    return seconds_to_cycles(seconds, cfg_.cycle_time);
  }

  void schedule(uint32_t r, const ETNode* n, uint64_t start, uint64_t dur) {
    events_.push(Event{start + dur, next_seq_++, r, n, start});
  }

  void start_slot(uint32_t r, Resource res, uint64_t now) {
    Npu& npu = npus_[r];
    const ETNode* n = npu.waiting[res].front();
    npu.waiting[res].pop_front();
    npu.slot[res] = Slot{n, now};
    result_.timeline.push_back(
        {TimelineRow::Kind::kIssue, r, now, n->id, n->name});
    if (res != kNetwork) {
      schedule(r, n, now, duration_of(r, *n));
      return;
    }
    Rendezvous& rv = rendezvous_[npu.rendezvous.at(n->id)];
    rv.arrived.emplace_back(r, n);
    rv.bytes = std::max(
        rv.bytes, static_cast<double>(get_int(*n, attr::kCommSize).value_or(0)));
    const size_t expected = rv.collective ? rv.members.size() : 2;
    if (rv.arrived.size() < expected) return;
    rv.started = true;
    const uint64_t dur = comm_duration(rv);
    std::sort(rv.arrived.begin(), rv.arrived.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [m, node] : rv.arrived) schedule(m, node, now, dur);
  }

  void issue_all(uint64_t now) {
    for (uint32_t r = 0; r < npus_.size(); ++r) {
      Npu& npu = npus_[r];
      while (const ETNode* n = npu.feeder->get_next_issuable_node()) {
        npu.waiting[resource_of(n->type)].push_back(n);
      }
    }
    for (uint32_t r = 0; r < npus_.size(); ++r) {
      for (int res = 0; res < kResources; ++res) {
        Npu& npu = npus_[r];
        if (npu.slot[res].node == nullptr && !npu.waiting[res].empty()) {
          start_slot(r, static_cast<Resource>(res), now);
        }
      }
    }
  }

  void complete(const Event& e) {
    Npu& npu = npus_[e.npu];
    const Resource res = resource_of(e.node->type);
    const uint64_t issue = npu.slot[res].issue;
    npu.slot[res] = Slot{};
    result_.timeline.push_back({TimelineRow::Kind::kCallback, e.npu, e.time,
                                e.node->id, e.node->name});
    result_.intervals.push_back(
        {e.npu, e.node->id, e.node->type, issue, e.start, e.time});
    NpuStats& s = result_.npus[e.npu];
    const uint64_t busy = e.time - e.start;
    if (res == kCompute) s.compute_busy += busy;
    if (res == kNetwork) s.comm_busy += busy;
    if (res == kMemory) s.memory_busy += busy;
    s.finish = std::max(s.finish, e.time);
    npu.feeder->free_children_nodes(e.node->id);
  }

  void check_finished() {
    std::vector<StuckNode> stuck;
    for (uint32_t r = 0; r < npus_.size(); ++r) {
      Npu& npu = npus_[r];
      if (npu.feeder->done()) continue;
      for (int res = 0; res < kResources; ++res) {
        if (const ETNode* n = npu.slot[res].node) {
          const auto& rv = rendezvous_[npu.rendezvous.at(n->id)];
          stuck.push_back({r, n->id, n->name, "waiting for peers in " + rv.label});
        }
        for (const ETNode* n : npu.waiting[res]) {
          stuck.push_back({r, n->id, n->name, "queued behind busy resource"});
        }
      }
      for (uint64_t id : npu.feeder->blocked_nodes()) {
        stuck.push_back(
            {r, id, npu.feeder->lookup_node(id)->name, "blocked on parents"});
      }
    }
    if (stuck.empty()) return;
    std::ostringstream msg;
    msg << "deadlock: " << stuck.size() << " node(s) cannot make progress";
    size_t shown = 0;
    for (const auto& s : stuck) {
      if (shown++ == 20) {
        msg << "\n  ...";
        break;
      }
      msg << "\n  npu " << s.npu << " node " << s.node_id << " '" << s.name
          << "': " << s.reason;
    }
    throw DeadlockError(msg.str(), std::move(stuck));
  }

  const SimConfig& cfg_;
  std::span<const Trace> traces_;
  std::vector<Npu> npus_;
  std::vector<Rendezvous> rendezvous_;
  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  uint64_t next_seq_ = 0;
  SimResult result_;
};

}  // namespace

DeadlockError::DeadlockError(std::string what, std::vector<StuckNode> stuck)
    : SimError(std::move(what)), stuck_(std::move(stuck)) {}

uint64_t seconds_to_cycles(double seconds, double cycle_time) {
  if (!(seconds > 0)) return 0;
  const double cycles = seconds / cycle_time;
  const double nearest = std::round(cycles);
  if (std::abs(cycles - nearest) <= 1e-9 * std::max(1.0, cycles)) {
    return static_cast<uint64_t>(nearest);
  }
  return static_cast<uint64_t>(std::ceil(cycles));
}

SimResult run_simulation(std::span<const Trace> traces, const SimConfig& cfg) {
  Engine engine(traces, cfg);
  return engine.run();
}

std::vector<BreakdownRow> compute_breakdown(const SimResult& result) {
  std::vector<BreakdownRow> rows(result.npus.size());
  // Per NPU: sweep sorted boundaries, tracking active compute and network.
  std::vector<std::vector<std::tuple<uint64_t, int, int>>> edges(
      result.npus.size());
  for (const auto& iv : result.intervals) {
    if (iv.finish == iv.start) continue;
    int cls = iv.type == NodeType::kComp ? 0 : is_comm(iv.type) ? 1 : -1;
    if (cls < 0) continue;
    edges[iv.npu].emplace_back(iv.start, cls, +1);
    edges[iv.npu].emplace_back(iv.finish, cls, -1);
  }
  for (uint32_t r = 0; r < rows.size(); ++r) {
    rows[r].npu = r;
    auto& ev = edges[r];
    std::sort(ev.begin(), ev.end());
    int active[2] = {0, 0};
    uint64_t prev = 0;
    for (const auto& [t, cls, delta] : ev) {
      if (t > prev) {
        if (active[0] > 0) rows[r].compute += t - prev;
        if (active[0] == 0 && active[1] > 0) rows[r].exposed_comm += t - prev;
      }
      active[cls] += delta;
      prev = t;
    }
  }
  return rows;
}

std::string breakdown_csv(std::span<const BreakdownRow> rows) {
  std::ostringstream out;
  out << "npu,compute_cycles,exposed_comm_cycles,total_cycles\n";
  for (const auto& r : rows) {
    out << r.npu << ',' << r.compute << ',' << r.exposed_comm << ','
        << r.total() << '\n';
  }
  return out.str();
}

}  // namespace chakra
