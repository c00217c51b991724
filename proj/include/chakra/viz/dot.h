#pragma once

#include <string>
#include <string_view>

#include "chakra/core/types.h"

namespace chakra {

// Renders a trace as a Graphviz digraph: one node statement per ETNode
// labeled with its name, one edge per parent relation, both ordered by id.
// An empty trace renders as `digraph et { }`.
std::string emit_dot(const Trace& trace);

// Quotes and escapes a string for use as a DOT id.
std::string dot_quote(std::string_view s);

}  // namespace chakra
