#pragma once

#include <cstdint>
#include <deque>
#include <unordered_map>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

class FeederError : public Error {
 public:
  using Error::Error;
};

// Dependency-resolving iterator over one trace.
//
// A node is issuable once every non-INVALID parent has completed. INVALID
// nodes are never handed out and never block their children. Ties are broken
// FIFO, with the initial queue in ascending id order and children released by
// one completion queued in ascending id order.
//
// A Feeder is a single-owner state machine: it may move between threads but
// must not be used from two threads at once.
class Feeder {
 public:
  // Throws InvalidTraceError when the trace does not validate.
  explicit Feeder(const Trace& trace);

  bool has_nodes_to_issue() const { return !queue_.empty(); }

  // Pops the queue head and marks it issued; nullptr when the queue is empty.
  // The pointer stays valid until the node is removed or the feeder dies.
  const ETNode* get_next_issuable_node();

  // Returns an issued, not yet completed node to the tail of the queue.
  void push_back_issuable_node(uint64_t node_id);

  // Marks an issued node completed and returns the children it released, in
  // the order they were queued.
  std::vector<uint64_t> free_children_nodes(uint64_t node_id);

  // nullptr for unknown or removed ids.
  const ETNode* lookup_node(uint64_t node_id) const;

  // Drops a node from the table. Fails while any child of it is still
  // outstanding (not completed).
  void remove_node(uint64_t node_id);

  // Non-INVALID nodes not yet completed (queued, issued, or blocked).
  size_t outstanding() const { return outstanding_; }
  bool done() const { return outstanding_ == 0; }

  uint32_t npu_id() const { return npu_id_; }

  // Ids of nodes still waiting on parents, in ascending order.
  std::vector<uint64_t> blocked_nodes() const;

 private:
  enum class State : uint8_t { kBlocked, kQueued, kIssued, kCompleted, kSkipped };

  struct Entry {
    ETNode node;
    uint32_t unmet = 0;
    std::vector<size_t> children;
    State state = State::kBlocked;
    bool removed = false;
  };

  Entry& entry_for(uint64_t node_id, const char* op);

  uint32_t npu_id_ = 0;
  std::vector<Entry> entries_;  // ascending id
  std::unordered_map<uint64_t, size_t> index_;
  std::deque<size_t> queue_;
  size_t outstanding_ = 0;
};

}  // namespace chakra
