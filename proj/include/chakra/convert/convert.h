#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

class ConvertError : public Error {
 public:
  using Error::Error;
};

// A node of a whole-job graph before it is split per NPU. Ids are unique
// across the whole graph.
struct AnnotatedNode {
  ETNode node;
  std::optional<uint32_t> npu;
};

struct ConvertResult {
  std::vector<Trace> traces;          // index == npu_id
  std::vector<std::string> warnings;  // one line each
};

// Splits a global graph into per-NPU traces (npu ids 0..max). Same-NPU edges
// are kept. A dependency from node u on NPU a to node v on NPU b becomes a
// COMM_SEND on a (parent u) and a COMM_RECV on b (a parent of v) that share a
// fresh comm_tag; one pair is emitted per (u, b) and reused by every child of
// u on b. Inserted nodes take ids above the largest input id and tags start
// at `first_tag`.
//
// Throws ConvertError for a node without an NPU assignment, duplicate ids,
// or parents that do not exist.
std::vector<Trace> split_per_npu(const std::vector<AnnotatedNode>& global,
                                 int64_t first_tag = 0);

struct PyTorchOptions {
  double cycles_per_us = 1.0;
};

// Converts the supported PyTorch execution-graph subset:
//
//   {"nodes": [{"id": 1, "name": "aten::mm", "ctrl_deps": [0],
//               "dur": 50.0, "npu": 0}, ...]}
//
// * a node with "dur" (microseconds) becomes COMP with
//   runtime = round(dur * cycles_per_us);
// * a node named "record_param_comms" becomes COMM_COLL; its type and size
//   come from its child (a node listing it in ctrl_deps) whose name starts
//   with "nccl:" and which carries "size" (or "comm_size") in bytes and
//   optionally "group".
//   The child is folded into the collective: its dependents depend on the
//   collective instead;
// * a "record_param_comms" node without such a child, and every other node,
//   becomes INVALID (the former with a warning).
//
// When no node has an "npu" field every node goes to NPU 0.
ConvertResult convert_pytorch(std::string_view json_text,
                              const PyTorchOptions& options = {});

// Converts the FlexFlow DOT dialect:
//
//   digraph g {
//     n1 [label="Dense", npu=0, cycles=120];
//     t7 [label="XferP2P", src=0, dst=1, bytes=1024];
//     n1 -> t7;
//   }
//
// Compute operators become COMP (runtime = cycles); "XferP2P" becomes a
// COMM_SEND on src and a COMM_RECV on dst; "MemLoad"/"MemStore" become
// memory nodes (tensor_size = bytes); unknown labels become INVALID.
// Throws ConvertError carrying the line number for unparseable input.
ConvertResult convert_flexflow(std::string_view dot_text);

// Minimal DOT document model used by the FlexFlow converter.
struct DotNode {
  std::string id;
  std::vector<std::pair<std::string, std::string>> attrs;
  int line = 0;

  const std::string* attr(std::string_view key) const;
};

struct DotEdge {
  std::string from;
  std::string to;
  int line = 0;
};

struct DotGraph {
  std::string name;
  bool directed = true;
  std::vector<DotNode> nodes;  // declaration order
  std::vector<DotEdge> edges;
};

// Parses a single (di)graph. Supports node, edge (including chains), and
// attribute statements, quoted and bare ids, and //, #, and /* */ comments.
// Subgraphs are not supported, and edge endpoints are not declared
// implicitly.
DotGraph parse_dot(std::string_view text);

}  // namespace chakra
