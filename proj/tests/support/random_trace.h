#pragma once

#include <algorithm>
#include <climits>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "chakra/core/types.h"

namespace chakra::testing {

inline std::string random_name(std::mt19937_64& rng) {
  static const std::string kAlphabet =
      "abcdefghijklmnopqrstuvwxyz_0123456789 \"\\/\t\xc3\xa9";
  std::uniform_int_distribution<size_t> len(0, 12);
  std::uniform_int_distribution<size_t> pick(0, kAlphabet.size() - 1);
  std::string s;
  for (size_t i = len(rng); i > 0; --i) {
    char c = kAlphabet[pick(rng)];
    if (static_cast<unsigned char>(c) >= 0x80) {
      s += "\xc3\xa9";  // keep multi-byte sequences whole
    } else {
      s += c;
    }
  }
  return s;
}

inline Attribute random_extra_attribute(std::mt19937_64& rng,
                                        const std::string& name) {
  std::uniform_int_distribution<int> kind(0, 5);
  std::uniform_int_distribution<int64_t> i64(INT64_MIN, INT64_MAX);
  std::uniform_real_distribution<double> f(-1e12, 1e12);
  std::uniform_int_distribution<size_t> len(0, 4);
  switch (kind(rng)) {
    case 0: return Attribute::Float(name, f(rng));
    case 1: return Attribute::Int(name, i64(rng));
    case 2: return Attribute::String(name, random_name(rng));
    case 3: {
      std::vector<double> v(len(rng));
      for (auto& x : v) x = f(rng);
      return Attribute::Floats(name, v);
    }
    case 4: {
      std::vector<int64_t> v(len(rng));
      for (auto& x : v) x = i64(rng);
      return Attribute::Ints(name, v);
    }
    default: {
      std::vector<std::string> v(len(rng));
      for (auto& x : v) x = random_name(rng);
      return Attribute::Strings(name, v);
    }
  }
}

// A random valid trace: a DAG over ids with gaps, every node type, the
// well-known attributes each type needs, and extra attributes of every kind.
inline Trace random_trace(std::mt19937_64& rng, size_t max_nodes) {
  Trace t;
  t.npu_id = std::uniform_int_distribution<uint32_t>(0, 1000)(rng);
  const size_t n = std::uniform_int_distribution<size_t>(0, max_nodes)(rng);
  uint64_t id = std::uniform_int_distribution<uint64_t>(0, 5)(rng);
  std::uniform_int_distribution<int> type_pick(0, 6);
  std::uniform_int_distribution<int64_t> size(0, int64_t{1} << 40);
  std::bernoulli_distribution edge(0.1);
  for (size_t i = 0; i < n; ++i) {
    ETNode node;
    node.id = id;
    id += std::uniform_int_distribution<uint64_t>(1, 3)(rng);
    node.name = random_name(rng);
    node.type = kAllNodeTypes[type_pick(rng)];
    for (const auto& prev : t.nodes) {
      if (edge(rng)) node.parents.push_back(prev.id);
    }
    switch (node.type) {
      case NodeType::kComp:
        node.attributes.push_back(Attribute::Int("runtime", size(rng)));
        break;
      case NodeType::kCommColl:
        node.attributes.push_back(Attribute::String(
            "comm_type",
            std::string(to_string(kCollectiveTypes[type_pick(rng) % 4]))));
        node.attributes.push_back(Attribute::Int("comm_size", size(rng)));
        node.attributes.push_back(Attribute::String("comm_group", "g0"));
        break;
      case NodeType::kCommSend:
      case NodeType::kCommRecv:
        node.attributes.push_back(Attribute::Int("comm_size", size(rng)));
        node.attributes.push_back(Attribute::Int("comm_peer", size(rng) % 64));
        break;
      case NodeType::kMemLoad:
      case NodeType::kMemStore:
        node.attributes.push_back(Attribute::Int("tensor_size", size(rng)));
        break;
      default:
        break;
    }
    const int extras = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int e = 0; e < extras; ++e) {
      node.attributes.push_back(
          random_extra_attribute(rng, "x" + std::to_string(e)));
    }
    if (!node.attributes.empty() && std::bernoulli_distribution(0.2)(rng)) {
      node.attributes.back().doc_string = random_name(rng);
    }
    t.nodes.push_back(std::move(node));
  }
  // Shuffle storage order; ids and edges stay a DAG.
  std::shuffle(t.nodes.begin(), t.nodes.end(), rng);
  return t;
}

// A random DAG of `n` nodes over ids 1..n with edge probability p, all COMP
// with the given runtime.
inline Trace random_dag(std::mt19937_64& rng, size_t n, double p,
                        int64_t runtime = 1) {
  Trace t;
  std::bernoulli_distribution edge(p);
  for (size_t i = 0; i < n; ++i) {
    ETNode node;
    node.id = i + 1;
    node.name = "n" + std::to_string(i + 1);
    node.type = NodeType::kComp;
    node.attributes.push_back(Attribute::Int("runtime", runtime));
    for (size_t j = 0; j < i; ++j) {
      if (edge(rng)) node.parents.push_back(j + 1);
    }
    t.nodes.push_back(std::move(node));
  }
  return t;
}

}  // namespace chakra::testing
