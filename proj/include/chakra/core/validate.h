#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chakra/core/types.h"

namespace chakra {

enum class ViolationCode {
  kDuplicateId,
  kDanglingParent,
  kSelfParent,
  kCycle,
  kKindMismatch,
  kEmptyAttributeName,
  kDuplicateAttribute,
  kMissingAttribute,
  kWellKnownKind,      // well-known attribute stored with the wrong kind
  kUnknownCommType,    // comm_type outside the closed set
  kBadSchemaVersion,
};

std::string_view to_string(ViolationCode code);

struct Violation {
  ViolationCode code;
  std::optional<uint64_t> node_id;
  std::string message;
};

using ValidationReport = std::vector<Violation>;

// Checks every structural and well-known-attribute invariant of a trace.
// Never throws; an empty report means the trace is valid.
ValidationReport validate_trace(const Trace& trace);

std::string format_violation(const Violation& v);

// Thrown by operations whose precondition is a valid trace.
class InvalidTraceError : public Error {
 public:
  InvalidTraceError(std::string what, ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// Throws InvalidTraceError naming the first few violations.
void require_valid(const Trace& trace, std::string_view context);

}  // namespace chakra
