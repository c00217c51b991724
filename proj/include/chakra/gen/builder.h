#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chakra/core/types.h"
#include "chakra/core/validate.h"

namespace chakra {

class BuilderError : public Error {
 public:
  using Error::Error;
};

struct NodeHandle {
  uint64_t id = 0;
  uint64_t owner = 0;  // serial of the issuing builder
};

// Hand-authors one NPU's trace. Ids are issued 1, 2, 3, ... in call order.
//
//   TraceBuilder b(0);
//   auto n1 = b.add_node(NodeType::kComp, "COMP_NODE", {Attribute::Int("runtime", 5)});
//   auto n2 = b.add_node(NodeType::kComp, "COMP_NODE", {Attribute::Int("runtime", 5)});
//   b.assign_dep(n1, n2);
class TraceBuilder {
 public:
  explicit TraceBuilder(uint32_t npu_id);

  TraceBuilder(const TraceBuilder&) = delete;
  TraceBuilder& operator=(const TraceBuilder&) = delete;
  TraceBuilder(TraceBuilder&&) = default;
  TraceBuilder& operator=(TraceBuilder&&) = default;

  NodeHandle add_node(NodeType type, std::string name,
                      std::vector<Attribute> attrs = {});

  // Makes `child` depend on `parent`. Repeating an existing edge is a no-op;
  // an edge that would close a cycle is rejected before it is recorded.
  void assign_dep(NodeHandle parent, NodeHandle child);

  void set_attr(NodeHandle node, Attribute attribute);

  const ETNode& node(NodeHandle h) const;
  size_t size() const { return nodes_.size(); }
  uint32_t npu_id() const { return npu_id_; }

  // Snapshot of the accumulated nodes.
  Trace trace() const;
  ValidationReport validate() const { return validate_trace(trace()); }
  // Throws InvalidTraceError if the snapshot does not validate.
  Trace finalize() const;

 private:
  size_t index_of(NodeHandle h, const char* op) const;
  bool reaches(size_t from, size_t to) const;  // along parent edges

  uint32_t npu_id_;
  uint64_t serial_;
  std::vector<ETNode> nodes_;  // nodes_[i].id == i + 1
};

// Convenience constructors for well-known node shapes.
std::vector<Attribute> comp_attrs(int64_t runtime_cycles);
std::vector<Attribute> coll_attrs(CommType type, int64_t bytes,
                                  std::string group);
std::vector<Attribute> p2p_attrs(int64_t bytes, uint32_t peer, int64_t tag);
std::vector<Attribute> mem_attrs(int64_t bytes);

}  // namespace chakra
