#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qpl/plan.hpp"
#include "qpl/schema.hpp"
#include "qpl/validator.hpp"

namespace qpl {

// A materialized stream of tuples. `ordered` is set only on Sort/TopSort
// outputs; everywhere else row order carries no meaning.
struct Relation {
  ColumnSignature signature;
  std::vector<std::vector<Value>> rows;
  bool ordered = false;
};

class InterpretError : public std::runtime_error {
 public:
  explicit InterpretError(const std::string& what) : std::runtime_error(what) {}
};

// Reference dataflow execution with SQL semantics: three-valued predicate
// logic, null-ignoring aggregates, distinct set operations with null = null,
// nulls-first ascending sort order. The plan must validate against
// db.schema.
Relation interpret(const Plan& plan, const Database& db);

struct StepResult {
  size_t index = 0;  // 1-based, bottom-up
  Relation relation;
};

// One result per sub-plan in bottom-up order; the last entry equals
// interpret(plan, db).
std::vector<StepResult> interpret_all_steps(const Plan& plan, const Database& db);

// Renderings used by the CLI: CSV with the signature as header (null cells
// are empty fields) and a JSON array of row arrays.
std::string relation_to_csv(const Relation& relation);
std::string relation_to_json(const Relation& relation);

// SQL LIKE with % and _ wildcards, case-sensitive.
bool like_match(const std::string& text, const std::string& pattern);

// Lexicographic row order built on order_values; total and deterministic.
bool row_less(const std::vector<Value>& a, const std::vector<Value>& b);

}  // namespace qpl
