#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qpl/plan.hpp"
#include "qpl/schema.hpp"

namespace qpl {

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity = Severity::Error;
  size_t begin = 0;
  size_t end = 0;
  std::string message;
};

struct ParseResult {
  std::optional<Plan> plan;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return plan.has_value(); }
};

// Batch parse of a complete plan. Whitespace between tokens is free-form;
// keywords are case-sensitive, identifiers are matched case-insensitively
// downstream. On failure, diagnostics carry byte positions.
ParseResult parse(std::string_view text);

// Canonical rendering: one line, single spaces between tokens, ", " between
// list elements and sibling plans. parse(serialize(p)) reproduces p.
std::string serialize(const Plan& plan);

enum class PrefixState { ValidPrefix, Complete, Invalid };

struct PrefixVerdict {
  PrefixState state = PrefixState::Invalid;
  size_t position = 0;   // set when Invalid
  std::string reason;    // set when Invalid

  bool operator==(const PrefixVerdict&) const = default;
};

// Incremental acceptor for constrained decoding. Complete iff the prefix
// parses as a whole plan; Invalid iff no suffix can complete it; otherwise
// ValidPrefix. Operates on character prefixes.
PrefixVerdict check_prefix(std::string_view prefix);

// As check_prefix, and additionally Invalid as soon as a completed table or
// qualified column identifier fails to resolve against the schema. An
// identifier still touching the end of the prefix only needs some schema
// name extending it.
PrefixVerdict check_prefix_with_schema(std::string_view prefix, const Schema& schema);

// Serializes one predicate in canonical form (used by diagnostics and tests).
std::string serialize_predicate(const Predicate& pred);

}  // namespace qpl
