#include "chakra/convert/convert.h"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "chakra/gen/builder.h"

namespace chakra {

std::vector<Trace> split_per_npu(const std::vector<AnnotatedNode>& global,
                                 int64_t first_tag) {
  std::unordered_map<uint64_t, uint32_t> npu_of;
  uint64_t max_id = 0;
  uint32_t max_npu = 0;
  for (const auto& a : global) {
    if (!a.npu) {
      throw ConvertError("node " + std::to_string(a.node.id) + " '" +
                         a.node.name + "' has no NPU assignment");
    }
    if (!npu_of.emplace(a.node.id, *a.npu).second) {
      throw ConvertError("duplicate node id " + std::to_string(a.node.id));
    }
    max_id = std::max(max_id, a.node.id);
    max_npu = std::max(max_npu, *a.npu);
  }

  std::vector<Trace> traces(global.empty() ? 0 : max_npu + 1);
  for (uint32_t i = 0; i < traces.size(); ++i) traces[i].npu_id = i;

  std::vector<const AnnotatedNode*> order;
  order.reserve(global.size());
  for (const auto& a : global) order.push_back(&a);
  std::sort(order.begin(), order.end(), [](const auto* x, const auto* y) {
    return x->node.id < y->node.id;
  });

  uint64_t next_id = max_id + 1;
  int64_t next_tag = first_tag;
  // (producer id, consumer npu) -> RECV id on the consumer side.
  std::map<std::pair<uint64_t, uint32_t>, uint64_t> bridges;

  for (const auto* a : order) {
    const uint32_t here = *a->npu;
    ETNode node = a->node;
    for (uint64_t& p : node.parents) {
      auto it = npu_of.find(p);
      if (it == npu_of.end()) {
        throw ConvertError("node " + std::to_string(node.id) +
                           " depends on unknown node " + std::to_string(p));
      }
      const uint32_t there = it->second;
      if (there == here) continue;
      auto [bridge, fresh] = bridges.try_emplace({p, here}, 0);
      if (fresh) {
        const int64_t tag = next_tag++;
        ETNode send;
        send.id = next_id++;
        send.name = "send_" + std::to_string(p) + "_to_npu" +
                    std::to_string(here);
        send.type = NodeType::kCommSend;
        send.parents = {p};
        send.attributes = p2p_attrs(0, here, tag);
        traces[there].nodes.push_back(std::move(send));

        ETNode recv;
        recv.id = next_id++;
        recv.name = "recv_" + std::to_string(p) + "_from_npu" +
                    std::to_string(there);
        recv.type = NodeType::kCommRecv;
        recv.attributes = p2p_attrs(0, there, tag);
        bridge->second = recv.id;
        traces[here].nodes.push_back(std::move(recv));
      }
      p = bridge->second;
    }
    traces[here].nodes.push_back(std::move(node));
  }
  for (auto& t : traces) t = canonical(std::move(t));
  return traces;
}

}  // namespace chakra
