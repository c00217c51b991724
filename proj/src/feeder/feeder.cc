#include "chakra/feeder/feeder.h"

#include <algorithm>
#include <unordered_set>

#include "chakra/core/validate.h"

namespace chakra {

Feeder::Feeder(const Trace& trace) : npu_id_(trace.npu_id) {
  require_valid(trace, "feeder load");
  Trace sorted = canonical(trace);
  entries_.reserve(sorted.nodes.size());
  for (auto& node : sorted.nodes) {
    index_.emplace(node.id, entries_.size());
    Entry entry;
    entry.node = std::move(node);
    entries_.push_back(std::move(entry));
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    Entry& e = entries_[i];
    if (e.node.type == NodeType::kInvalid) {
      e.state = State::kSkipped;
      continue;
    }
    ++outstanding_;
    std::unordered_set<uint64_t> seen;
    for (uint64_t p : e.node.parents) {
      if (!seen.insert(p).second) continue;
      size_t pi = index_.at(p);
      if (entries_[pi].node.type == NodeType::kInvalid) continue;
      entries_[pi].children.push_back(i);
      ++e.unmet;
    }
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].state == State::kBlocked && entries_[i].unmet == 0) {
      entries_[i].state = State::kQueued;
      queue_.push_back(i);
    }
  }
}

Feeder::Entry& Feeder::entry_for(uint64_t node_id, const char* op) {
  auto it = index_.find(node_id);
  if (it == index_.end() || entries_[it->second].removed) {
    throw FeederError(std::string(op) + ": unknown node " +
                      std::to_string(node_id));
  }
  return entries_[it->second];
}

const ETNode* Feeder::get_next_issuable_node() {
  if (queue_.empty()) return nullptr;
  Entry& e = entries_[queue_.front()];
  queue_.pop_front();
  e.state = State::kIssued;
  return &e.node;
}

void Feeder::push_back_issuable_node(uint64_t node_id) {
  Entry& e = entry_for(node_id, "push_back_issuable_node");
  if (e.state != State::kIssued) {
    throw FeederError("push_back_issuable_node: node " +
                      std::to_string(node_id) + " is not issued");
  }
  e.state = State::kQueued;
  queue_.push_back(index_.at(node_id));
}

std::vector<uint64_t> Feeder::free_children_nodes(uint64_t node_id) {
  Entry& e = entry_for(node_id, "free_children_nodes");
  if (e.state != State::kIssued) {
    throw FeederError("free_children_nodes: node " + std::to_string(node_id) +
                      (e.state == State::kCompleted ? " already completed"
                                                    : " was not issued"));
  }
  e.state = State::kCompleted;
  --outstanding_;
  std::vector<size_t> released;
  for (size_t c : e.children) {
    Entry& child = entries_[c];
    if (child.removed) continue;
    if (--child.unmet == 0 && child.state == State::kBlocked) {
      released.push_back(c);
    }
  }
  std::sort(released.begin(), released.end());
  std::vector<uint64_t> ids;
  ids.reserve(released.size());
  for (size_t c : released) {
    entries_[c].state = State::kQueued;
    queue_.push_back(c);
    ids.push_back(entries_[c].node.id);
  }
  return ids;
}

const ETNode* Feeder::lookup_node(uint64_t node_id) const {
  auto it = index_.find(node_id);
  if (it == index_.end() || entries_[it->second].removed) return nullptr;
  return &entries_[it->second].node;
}

void Feeder::remove_node(uint64_t node_id) {
  Entry& e = entry_for(node_id, "remove_node");
  for (size_t c : e.children) {
    const Entry& child = entries_[c];
    if (!child.removed && child.state != State::kCompleted) {
      throw FeederError("remove_node: node " + std::to_string(node_id) +
                        " still has live child " +
                        std::to_string(child.node.id));
    }
  }
  size_t idx = index_.at(node_id);
  if (e.state == State::kQueued) {
    queue_.erase(std::find(queue_.begin(), queue_.end(), idx));
  }
  if (e.state != State::kCompleted && e.state != State::kSkipped) {
    --outstanding_;
  }
  e.removed = true;
}

std::vector<uint64_t> Feeder::blocked_nodes() const {
  std::vector<uint64_t> ids;
  for (const auto& e : entries_) {
    if (!e.removed && e.state == State::kBlocked) ids.push_back(e.node.id);
  }
  return ids;
}

}  // namespace chakra
