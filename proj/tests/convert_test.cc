#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "chakra/convert/convert.h"
#include "chakra/core/validate.h"

namespace chakra {
namespace {

const ETNode* by_name(const Trace& t, std::string_view name) {
  for (const auto& n : t.nodes) {
    if (n.name == name) return &n;
  }
  return nullptr;
}

TEST(PyTorch, ComputeNodeRuntime) {
  auto r = convert_pytorch(R"({"nodes": [
    {"id": 1, "name": "aten::mm", "ctrl_deps": [], "dur": 50.0}]})");
  ASSERT_EQ(r.traces.size(), 1u);
  const ETNode& n = r.traces[0].nodes.at(0);
  EXPECT_EQ(n.type, NodeType::kComp);
  EXPECT_EQ(get_int(n, "runtime"), 50);

  PyTorchOptions opts;
  opts.cycles_per_us = 1000;
  r = convert_pytorch(R"({"nodes": [{"id": 1, "name": "aten::mm", "dur": 1.25}]})",
                      opts);
  EXPECT_EQ(get_int(r.traces[0].nodes[0], "runtime"), 1250);
}

TEST(PyTorch, CollectiveFoldsDescriptor) {
  auto r = convert_pytorch(R"({"nodes": [
    {"id": 1, "name": "aten::mm", "dur": 10},
    {"id": 2, "name": "record_param_comms", "ctrl_deps": [1]},
    {"id": 3, "name": "nccl:all_reduce", "ctrl_deps": [2], "size": 4194304},
    {"id": 4, "name": "aten::add", "ctrl_deps": [3], "dur": 5}]})");
  ASSERT_EQ(r.traces.size(), 1u);
  const Trace& t = r.traces[0];
  EXPECT_TRUE(r.warnings.empty());
  ASSERT_EQ(t.nodes.size(), 3u);
  const ETNode* coll = t.find(2);
  ASSERT_NE(coll, nullptr);
  EXPECT_EQ(coll->type, NodeType::kCommColl);
  EXPECT_EQ(get_comm_type(*coll), CommType::kAllReduce);
  EXPECT_EQ(get_int(*coll, attr::kCommSize), 4194304);
  EXPECT_EQ(t.find(4)->parents, std::vector<uint64_t>{2});
  EXPECT_EQ(t.find(3), nullptr);
}

TEST(PyTorch, DescriptorBeforeCollectiveInIdOrder) {
  auto r = convert_pytorch(R"({"nodes": [
    {"id": 9, "name": "record_param_comms"},
    {"id": 2, "name": "nccl:all_gather", "ctrl_deps": [9], "comm_size": 64,
     "group": "tp"}]})");
  const ETNode* coll = r.traces[0].find(9);
  ASSERT_NE(coll, nullptr);
  EXPECT_EQ(get_comm_type(*coll), CommType::kAllGather);
  EXPECT_EQ(get_string(*coll, attr::kCommGroup), "tp");
}

TEST(PyTorch, UnknownCollectiveBecomesInvalid) {
  auto r = convert_pytorch(R"({"nodes": [
    {"id": 1, "name": "record_param_comms"},
    {"id": 2, "name": "custom:reduce", "ctrl_deps": [1]}]})");
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("record_param_comms"), std::string::npos);
  EXPECT_EQ(r.traces[0].find(1)->type, NodeType::kInvalid);
  EXPECT_EQ(r.traces[0].find(2)->type, NodeType::kInvalid);
}

TEST(PyTorch, SplitsByNpu) {
  auto r = convert_pytorch(R"({"nodes": [
    {"id": 1, "name": "a", "dur": 1, "npu": 0},
    {"id": 2, "name": "b", "dur": 1, "npu": 1, "ctrl_deps": [1]}]})");
  ASSERT_EQ(r.traces.size(), 2u);
  EXPECT_EQ(r.traces[0].nodes.size(), 2u);  // a + send
  EXPECT_EQ(r.traces[1].nodes.size(), 2u);  // recv + b
}

TEST(PyTorch, Errors) {
  EXPECT_THROW(convert_pytorch("{"), ConvertError);
  EXPECT_THROW(convert_pytorch(R"({"nodes": 3})"), ConvertError);
  EXPECT_THROW(convert_pytorch(R"({"nodes": [{"id": 1, "name": "a", "ctrl_deps": [5]}]})"),
               ConvertError);
  EXPECT_THROW(convert_pytorch(R"({"nodes": [{"id": 1, "name": "a"}, {"id": 1, "name": "b"}]})"),
               ConvertError);
  EXPECT_THROW(convert_pytorch(R"({"nodes": [{"id": 1, "name": "a", "dur": 1},
                                            {"id": 2, "name": "b", "dur": 1, "npu": 0}]})"),
               ConvertError);  // partial npu assignment
}

TEST(Dot, ParsesStatementsAndComments) {
  DotGraph g = parse_dot(R"(strict digraph "g" {
    // comment
    rankdir=LR; # another
    node [shape=box];
    a [label="x \"y\""];
    b; c
    /* block
       comment */
    a -> b -> c [weight=2];
  })");
  EXPECT_EQ(g.name, "g");
  EXPECT_TRUE(g.directed);
  ASSERT_EQ(g.nodes.size(), 3u);
  EXPECT_EQ(*g.nodes[0].attr("label"), "x \"y\"");
  EXPECT_EQ(*g.nodes[1].attr("shape"), "box");
  ASSERT_EQ(g.edges.size(), 2u);
  EXPECT_EQ(g.edges[1].from, "b");
  EXPECT_EQ(g.edges[1].line, 9);
}

TEST(Dot, ErrorsCarryLineNumbers) {
  try {
    parse_dot("digraph {\n  a -> ;\n}");
    FAIL();
  } catch (const ConvertError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_dot("digraph { subgraph s { a } }"), ConvertError);
  EXPECT_THROW(parse_dot("digraph { a [label=\"open }"), ConvertError);
}

TEST(FlexFlow, ComputeTransferAndEdges) {
  auto r = convert_flexflow(R"(digraph g {
    n1 [label="Dense", npu=0, cycles=120];
    t7 [label="XferP2P", src=0, dst=1, bytes=1024];
    n2 [label="Relu", npu=1, cycles=30];
    n1 -> t7;
    t7 -> n2;
  })");
  ASSERT_EQ(r.traces.size(), 2u);
  EXPECT_TRUE(r.warnings.empty());
  const ETNode* dense = by_name(r.traces[0], "n1");
  ASSERT_NE(dense, nullptr);
  EXPECT_EQ(dense->type, NodeType::kComp);
  EXPECT_EQ(get_int(*dense, "runtime"), 120);
  const ETNode* send = by_name(r.traces[0], "t7");
  ASSERT_NE(send, nullptr);
  EXPECT_EQ(send->type, NodeType::kCommSend);
  EXPECT_EQ(send->parents, std::vector<uint64_t>{dense->id});
  EXPECT_EQ(get_int(*send, attr::kCommPeer), 1);
  EXPECT_EQ(get_int(*send, attr::kCommSize), 1024);
  const ETNode* recv = by_name(r.traces[1], "t7_recv");
  ASSERT_NE(recv, nullptr);
  EXPECT_EQ(get_int(*recv, attr::kCommTag), get_int(*send, attr::kCommTag));
  const ETNode* relu = by_name(r.traces[1], "n2");
  EXPECT_EQ(relu->parents, std::vector<uint64_t>{recv->id});
}

TEST(FlexFlow, MemoryAndUnknownOperators) {
  auto r = convert_flexflow(R"(digraph {
    m [name="MemLoad", npu=0, bytes=64];
    q [label="Quantum", npu=0];
  })");
  EXPECT_EQ(by_name(r.traces[0], "m")->type, NodeType::kMemLoad);
  EXPECT_EQ(by_name(r.traces[0], "q")->type, NodeType::kInvalid);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("line 3"), std::string::npos);
}

TEST(FlexFlow, ErrorsCarryLineNumbers) {
  auto line_of = [](std::string_view dot) -> std::string {
    try {
      convert_flexflow(dot);
    } catch (const ConvertError& e) {
      return e.what();
    }
    return "";
  };
  EXPECT_NE(line_of("digraph {\n a [label=\"Dense\", cycles=3];\n}").find("line 2"),
            std::string::npos);
  EXPECT_NE(line_of("digraph {\n a [label=\"Dense\", npu=0, cycles=3];\n\n a -> z;\n}")
                .find("line 4"),
            std::string::npos);
  EXPECT_NE(line_of("digraph {\n\n t [label=\"XferP2P\", src=1, dst=1, bytes=2];\n}")
                .find("line 3"),
            std::string::npos);
  EXPECT_NE(line_of("graph { a -- b }").find("digraph"), std::string::npos);
}

// Reachability between original nodes must be exactly preserved by the
// split, with SEND -> RECV pairs (matched by tag) standing in for
// cross-NPU edges.
TEST(Split, PreservesReachability) {
  std::mt19937_64 rng(12);
  for (int iter = 0; iter < 100; ++iter) {
    const size_t n = std::uniform_int_distribution<size_t>(1, 15)(rng);
    const uint32_t npus = std::uniform_int_distribution<uint32_t>(1, 4)(rng);
    std::vector<AnnotatedNode> global(n);
    std::map<uint64_t, std::set<uint64_t>> parents;
    for (size_t i = 0; i < n; ++i) {
      auto& a = global[i];
      a.node.id = 2 * i + 1;
      a.node.name = "n" + std::to_string(i);
      a.node.type = NodeType::kComp;
      a.node.attributes = {Attribute::Int("runtime", 1)};
      a.npu = i == 0 ? npus - 1
                     : std::uniform_int_distribution<uint32_t>(0, npus - 1)(rng);
      for (size_t p = 0; p < i; ++p) {
        if (std::bernoulli_distribution(0.3)(rng)) {
          a.node.parents.push_back(2 * p + 1);
          parents[a.node.id].insert(2 * p + 1);
        }
      }
    }
    auto traces = split_per_npu(global, 100);
    ASSERT_EQ(traces.size(), npus);

    // Union graph with globally unique keys (npu, id).
    using Key = std::pair<uint32_t, uint64_t>;
    std::map<Key, std::set<Key>> up;
    std::map<int64_t, Key> send_of;
    std::map<int64_t, Key> recv_of;
    std::map<uint64_t, Key> original;
    for (const auto& t : traces) {
      EXPECT_TRUE(validate_trace(t).empty());
      for (const auto& node : t.nodes) {
        Key k{t.npu_id, node.id};
        for (uint64_t p : node.parents) up[k].insert({t.npu_id, p});
        if (node.type == NodeType::kCommSend) {
          send_of[*get_int(node, attr::kCommTag)] = k;
        } else if (node.type == NodeType::kCommRecv) {
          recv_of[*get_int(node, attr::kCommTag)] = k;
        } else {
          original[node.id] = k;
        }
      }
    }
    ASSERT_EQ(original.size(), n);
    ASSERT_EQ(send_of.size(), recv_of.size());
    for (const auto& [tag, r] : recv_of) {
      EXPECT_GE(tag, 100);
      up[r].insert(send_of.at(tag));
    }

    auto ancestors = [&](Key k) {
      std::set<Key> seen;
      std::vector<Key> stack = {k};
      while (!stack.empty()) {
        Key x = stack.back();
        stack.pop_back();
        for (const Key& p : up[x]) {
          if (seen.insert(p).second) stack.push_back(p);
        }
      }
      return seen;
    };
    auto ancestors_orig = [&](uint64_t id) {
      std::set<uint64_t> seen;
      std::vector<uint64_t> stack = {id};
      while (!stack.empty()) {
        uint64_t x = stack.back();
        stack.pop_back();
        for (uint64_t p : parents[x]) {
          if (seen.insert(p).second) stack.push_back(p);
        }
      }
      return seen;
    };
    for (const auto& [id, key] : original) {
      std::set<uint64_t> got;
      for (const Key& a : ancestors(key)) {
        for (const auto& [oid, okey] : original) {
          if (okey == a) got.insert(oid);
        }
      }
      EXPECT_EQ(got, ancestors_orig(id)) << "iteration " << iter;
    }
  }
}

TEST(Split, Errors) {
  std::vector<AnnotatedNode> g(1);
  g[0].node.id = 1;
  EXPECT_THROW(split_per_npu(g), ConvertError);
  g[0].npu = 0;
  g[0].node.parents = {4};
  EXPECT_THROW(split_per_npu(g), ConvertError);
  g.push_back(g[0]);
  g[0].node.parents.clear();
  EXPECT_THROW(split_per_npu(g), ConvertError);
}

}  // namespace
}  // namespace chakra
