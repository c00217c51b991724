#include "chakra/gen/builder.h"

#include <algorithm>
#include <atomic>

namespace chakra {
namespace {
std::atomic<uint64_t> g_next_serial{1};
}

TraceBuilder::TraceBuilder(uint32_t npu_id)
    : npu_id_(npu_id), serial_(g_next_serial.fetch_add(1)) {}

NodeHandle TraceBuilder::add_node(NodeType type, std::string name,
                                  std::vector<Attribute> attrs) {
  ETNode node;
  node.id = nodes_.size() + 1;
  node.name = std::move(name);
  node.type = type;
  node.attributes = std::move(attrs);
  nodes_.push_back(std::move(node));
  return {nodes_.back().id, serial_};
}

size_t TraceBuilder::index_of(NodeHandle h, const char* op) const {
  if (h.owner != serial_ || h.id == 0 || h.id > nodes_.size()) {
    throw BuilderError(std::string(op) + ": handle " + std::to_string(h.id) +
                       " does not belong to this builder");
  }
  return h.id - 1;
}

bool TraceBuilder::reaches(size_t from, size_t to) const {
  std::vector<char> seen(nodes_.size(), 0);
  std::vector<size_t> stack{from};
  while (!stack.empty()) {
    size_t n = stack.back();
    stack.pop_back();
    if (n == to) return true;
    if (seen[n]) continue;
    seen[n] = 1;
    for (uint64_t p : nodes_[n].parents) stack.push_back(p - 1);
  }
  return false;
}

void TraceBuilder::assign_dep(NodeHandle parent, NodeHandle child) {
  size_t p = index_of(parent, "assign_dep");
  size_t c = index_of(child, "assign_dep");
  auto& parents = nodes_[c].parents;
  if (std::find(parents.begin(), parents.end(), parent.id) != parents.end()) {
    return;
  }
  // The new edge closes a cycle iff the child is already an ancestor of the
  // parent (or is the parent).
  if (reaches(p, c)) {
    throw BuilderError("assign_dep: edge " + std::to_string(parent.id) +
                       " -> " + std::to_string(child.id) +
                       " would create a cycle");
  }
  parents.push_back(parent.id);
}

void TraceBuilder::set_attr(NodeHandle node, Attribute attribute) {
  chakra::set_attr(nodes_[index_of(node, "set_attr")], std::move(attribute));
}

const ETNode& TraceBuilder::node(NodeHandle h) const {
  return nodes_[index_of(h, "node")];
}

Trace TraceBuilder::trace() const {
  Trace t;
  t.npu_id = npu_id_;
  t.nodes = nodes_;
  return t;
}

Trace TraceBuilder::finalize() const {
  Trace t = trace();
  require_valid(t, "TraceBuilder::finalize");
  return t;
}

std::vector<Attribute> comp_attrs(int64_t runtime_cycles) {
  return {Attribute::Int(std::string(attr::kRuntime), runtime_cycles)};
}

std::vector<Attribute> coll_attrs(CommType type, int64_t bytes,
                                  std::string group) {
  return {Attribute::String(std::string(attr::kCommType),
                            std::string(to_string(type))),
          Attribute::Int(std::string(attr::kCommSize), bytes),
          Attribute::String(std::string(attr::kCommGroup), std::move(group))};
}

std::vector<Attribute> p2p_attrs(int64_t bytes, uint32_t peer, int64_t tag) {
  return {Attribute::Int(std::string(attr::kCommSize), bytes),
          Attribute::Int(std::string(attr::kCommPeer), peer),
          Attribute::Int(std::string(attr::kCommTag), tag)};
}

std::vector<Attribute> mem_attrs(int64_t bytes) {
  return {Attribute::Int(std::string(attr::kTensorSize), bytes)};
}

}  // namespace chakra
