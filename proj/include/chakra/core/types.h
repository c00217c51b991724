#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chakra {

// Base for every error raised by the toolkit. Subsystems derive from it so
// the CLI can map failures onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NodeType : uint8_t {
  kInvalid = 0,
  kMemLoad,
  kMemStore,
  kComp,
  kCommSend,
  kCommRecv,
  kCommColl,
};

inline constexpr NodeType kAllNodeTypes[] = {
    NodeType::kInvalid,  NodeType::kMemLoad,  NodeType::kMemStore,
    NodeType::kComp,     NodeType::kCommSend, NodeType::kCommRecv,
    NodeType::kCommColl,
};

std::string_view to_string(NodeType type);
std::optional<NodeType> parse_node_type(std::string_view name);

inline bool is_memory(NodeType t) {
  return t == NodeType::kMemLoad || t == NodeType::kMemStore;
}
inline bool is_comm(NodeType t) {
  return t == NodeType::kCommSend || t == NodeType::kCommRecv ||
         t == NodeType::kCommColl;
}

enum class AttributeKind : uint8_t {
  kFloat = 0,
  kInt,
  kString,
  kFloats,
  kInts,
  kStrings,
};

std::string_view to_string(AttributeKind kind);
std::optional<AttributeKind> parse_attribute_kind(std::string_view name);

// The variant alternative index equals the numeric value of the matching
// AttributeKind, so `value.index() == static_cast<size_t>(kind)` is the
// kind/value consistency check.
using AttributeValue =
    std::variant<double, int64_t, std::string, std::vector<double>,
                 std::vector<int64_t>, std::vector<std::string>>;

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kInt;
  std::string doc_string;
  AttributeValue value = int64_t{0};

  bool consistent() const {
    return value.index() == static_cast<size_t>(kind);
  }

  static Attribute Float(std::string name, double v);
  static Attribute Int(std::string name, int64_t v);
  static Attribute String(std::string name, std::string v);
  static Attribute Floats(std::string name, std::vector<double> v);
  static Attribute Ints(std::string name, std::vector<int64_t> v);
  static Attribute Strings(std::string name, std::vector<std::string> v);

  friend bool operator==(const Attribute&, const Attribute&) = default;
};

struct ETNode {
  uint64_t id = 0;
  std::string name;
  NodeType type = NodeType::kInvalid;
  std::vector<uint64_t> parents;
  std::vector<Attribute> attributes;

  friend bool operator==(const ETNode&, const ETNode&) = default;
};

inline constexpr std::string_view kSchemaVersion = "0.1";
inline constexpr int kSchemaMajor = 0;

struct SchemaVersion {
  int major = 0;
  int minor = 0;
};

// Parses "<major>.<minor>"; nullopt when malformed.
std::optional<SchemaVersion> parse_schema_version(std::string_view text);

// One NPU's execution trace.
struct Trace {
  std::string schema_version{kSchemaVersion};
  uint32_t npu_id = 0;
  std::vector<ETNode> nodes;

  const ETNode* find(uint64_t id) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

// Returns a copy with nodes sorted by ascending id. This is the order every
// encoder writes and every decoder returns.
Trace canonical(Trace trace);

// Well-known attribute names.
namespace attr {
inline constexpr std::string_view kRuntime = "runtime";
inline constexpr std::string_view kCommType = "comm_type";
inline constexpr std::string_view kCommSize = "comm_size";
inline constexpr std::string_view kCommGroup = "comm_group";
inline constexpr std::string_view kCommPeer = "comm_peer";
inline constexpr std::string_view kTensorSize = "tensor_size";
// Matches a SEND with its RECV when the same (src, dst) pair carries
// several transfers.
inline constexpr std::string_view kCommTag = "comm_tag";
// Operation count used by modeled compute timing.
inline constexpr std::string_view kNumOps = "num_ops";
}  // namespace attr

enum class CommType : uint8_t {
  kAllReduce = 0,
  kAllGather,
  kReduceScatter,
  kAllToAll,
  kSend,
  kRecv,
};

inline constexpr CommType kCollectiveTypes[] = {
    CommType::kAllReduce, CommType::kAllGather, CommType::kReduceScatter,
    CommType::kAllToAll};

std::string_view to_string(CommType type);
std::optional<CommType> parse_comm_type(std::string_view name);

const Attribute* get_attr(const ETNode& node, std::string_view name);
std::optional<int64_t> get_int(const ETNode& node, std::string_view name);
std::optional<std::string_view> get_string(const ETNode& node,
                                           std::string_view name);
std::optional<CommType> get_comm_type(const ETNode& node);

// Inserts or replaces an attribute, keeping the original position on replace.
void set_attr(ETNode& node, Attribute attribute);

}  // namespace chakra
