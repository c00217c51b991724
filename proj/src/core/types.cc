#include "chakra/core/types.h"

#include <algorithm>
#include <array>

namespace chakra {
namespace {

constexpr std::array<std::string_view, 7> kNodeTypeNames = {
    "INVALID", "MEM_LOAD", "MEM_STORE", "COMP",
    "COMM_SEND", "COMM_RECV", "COMM_COLL"};

constexpr std::array<std::string_view, 6> kAttributeKindNames = {
    "FLOAT", "INT", "STRING", "FLOATS", "INTS", "STRINGS"};

constexpr std::array<std::string_view, 6> kCommTypeNames = {
    "ALL_REDUCE", "ALL_GATHER", "REDUCE_SCATTER", "ALL_TO_ALL", "SEND",
    "RECV"};

template <typename Enum, size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names,
                           std::string_view name) {
  for (size_t i = 0; i < N; ++i) {
    if (names[i] == name) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(NodeType type) {
  return kNodeTypeNames.at(static_cast<size_t>(type));
}

std::optional<NodeType> parse_node_type(std::string_view name) {
  return lookup<NodeType>(kNodeTypeNames, name);
}

std::string_view to_string(AttributeKind kind) {
  return kAttributeKindNames.at(static_cast<size_t>(kind));
}

std::optional<AttributeKind> parse_attribute_kind(std::string_view name) {
  return lookup<AttributeKind>(kAttributeKindNames, name);
}

std::string_view to_string(CommType type) {
  return kCommTypeNames.at(static_cast<size_t>(type));
}

std::optional<CommType> parse_comm_type(std::string_view name) {
  return lookup<CommType>(kCommTypeNames, name);
}

Attribute Attribute::Float(std::string name, double v) {
  return {std::move(name), AttributeKind::kFloat, {}, v};
}
Attribute Attribute::Int(std::string name, int64_t v) {
  return {std::move(name), AttributeKind::kInt, {}, v};
}
Attribute Attribute::String(std::string name, std::string v) {
  return {std::move(name), AttributeKind::kString, {}, std::move(v)};
}
Attribute Attribute::Floats(std::string name, std::vector<double> v) {
  return {std::move(name), AttributeKind::kFloats, {}, std::move(v)};
}
Attribute Attribute::Ints(std::string name, std::vector<int64_t> v) {
  return {std::move(name), AttributeKind::kInts, {}, std::move(v)};
}
Attribute Attribute::Strings(std::string name, std::vector<std::string> v) {
  return {std::move(name), AttributeKind::kStrings, {}, std::move(v)};
}

std::optional<SchemaVersion> parse_schema_version(std::string_view text) {
  auto dot = text.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == text.size()) {
    return std::nullopt;
  }
  auto parse_part = [](std::string_view part) -> std::optional<int> {
    if (part.size() > 6) return std::nullopt;
    int v = 0;
    for (char c : part) {
      if (c < '0' || c > '9') return std::nullopt;
      v = v * 10 + (c - '0');
    }
    return v;
  };
  auto major = parse_part(text.substr(0, dot));
  auto minor = parse_part(text.substr(dot + 1));
  if (!major || !minor) return std::nullopt;
  return SchemaVersion{*major, *minor};
}

const ETNode* Trace::find(uint64_t id) const {
  for (const auto& node : nodes) {
    if (node.id == id) return &node;
  }
  return nullptr;
}

Trace canonical(Trace trace) {
  std::stable_sort(trace.nodes.begin(), trace.nodes.end(),
                   [](const ETNode& a, const ETNode& b) { return a.id < b.id; });
  return trace;
}

const Attribute* get_attr(const ETNode& node, std::string_view name) {
  for (const auto& a : node.attributes) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::optional<int64_t> get_int(const ETNode& node, std::string_view name) {
  const Attribute* a = get_attr(node, name);
  if (a == nullptr || a->kind != AttributeKind::kInt || !a->consistent()) {
    return std::nullopt;
  }
  return std::get<int64_t>(a->value);
}

std::optional<std::string_view> get_string(const ETNode& node,
                                           std::string_view name) {
  const Attribute* a = get_attr(node, name);
  if (a == nullptr || a->kind != AttributeKind::kString || !a->consistent()) {
    return std::nullopt;
  }
  return std::string_view(std::get<std::string>(a->value));
}

std::optional<CommType> get_comm_type(const ETNode& node) {
  auto s = get_string(node, attr::kCommType);
  if (!s) return std::nullopt;
  return parse_comm_type(*s);
}

void set_attr(ETNode& node, Attribute attribute) {
  for (auto& a : node.attributes) {
    if (a.name == attribute.name) {
      a = std::move(attribute);
      return;
    }
  }
  node.attributes.push_back(std::move(attribute));
}

}  // namespace chakra
