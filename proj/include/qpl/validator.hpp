#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpl/parser.hpp"
#include "qpl/plan.hpp"
#include "qpl/schema.hpp"

namespace qpl {

// The column shape of the tuple stream a node outputs. Entry names are the
// qualified column names (schema spelling), aliases, or verbatim aggregate
// forms such as "SUM(visit.Total_spent)".
struct SignatureColumn {
  std::string name;
  Dtype dtype = Dtype::Text;

  bool operator==(const SignatureColumn&) const = default;
};

using ColumnSignature = std::vector<SignatureColumn>;

// Case-insensitive lookup of a column by its full display name.
std::optional<size_t> find_in_signature(const ColumnSignature& sig, const std::string& name);

struct ValidationReport {
  bool ok = false;
  std::vector<Diagnostic> diagnostics;
  // One signature per node in bottom-up (sub_plans) order; empty signatures
  // mark nodes that failed to validate.
  std::vector<ColumnSignature> step_signatures;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Schema-aware validation: resolves every reference bottom-up, checks
// dataflow visibility (a node sees only its children's outputs, or the
// scanned table at a leaf), group-by discipline and set-operation shape.
ValidationReport validate(const Plan& plan, const Schema& schema);

// Root signature of a valid plan; throws ValidationError otherwise.
ColumnSignature output_signature(const Plan& plan, const Schema& schema);

// For a Sort/TopSort root: positions in the root's output list of the
// longest prefix of its sort keys that the output still carries. Used to
// re-apply and to verify ordering across engines. Empty for other roots.
std::vector<size_t> ordered_key_positions(const Plan& root, const ColumnSignature& child_sig);

}  // namespace qpl
