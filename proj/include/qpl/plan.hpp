#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qpl/value.hpp"

namespace qpl {

// The nine plan operators. Scan is the only leaf; Join and the set
// operations take two inputs, everything else takes one.
enum class OpKind {
  Scan,
  Aggregate,
  Filter,
  Join,
  Except,
  Intersect,
  Union,
  Sort,
  TopSort,
};

const char* op_name(OpKind op);
std::optional<OpKind> op_from_name(const std::string& name);
int op_arity(OpKind op);  // 0 for Scan, 1 or 2 otherwise

// A column reference. `table` is set for qualified "table.column" forms.
// `column` may also be a bare alias introduced below this node, or the
// verbatim name of an aggregate output such as "SUM(visit.Total_spent)".
struct ColumnRef {
  std::optional<std::string> table;
  std::string column;

  std::string full_name() const { return table ? *table + "." + column : column; }
  bool operator==(const ColumnRef&) const = default;
};

struct Literal {
  Value value;

  bool operator==(const Literal&) const = default;
};

using Operand = std::variant<ColumnRef, Literal>;

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge, Like };

const char* compare_op_token(CompareOp op);

struct Predicate;

struct Comparison {
  CompareOp op = CompareOp::Eq;
  Operand lhs;
  Operand rhs;

  bool operator==(const Comparison&) const = default;
};

struct NullCheck {
  Operand operand;
  bool negated = false;  // true for IS NOT NULL

  bool operator==(const NullCheck&) const = default;
};

struct InList {
  Operand operand;
  std::vector<Literal> items;

  bool operator==(const InList&) const = default;
};

enum class BoolOp { And, Or, Not };

// Connective node; And/Or hold two or more children, Not holds one.
struct BoolCombo {
  BoolOp op = BoolOp::And;
  std::vector<Predicate> children;

  bool operator==(const BoolCombo&) const = default;
};

struct Predicate {
  std::variant<Comparison, NullCheck, InList, BoolCombo> node;

  bool operator==(const Predicate&) const = default;
};

enum class AggFunc { Sum, Count, Avg, Min, Max };

const char* agg_func_name(AggFunc f);
std::optional<AggFunc> agg_func_from_name(const std::string& name);

// An aggregate application; only valid in Aggregate node outputs.
// COUNT(*) sets countstar and leaves the operand empty.
struct AggApply {
  AggFunc func = AggFunc::Count;
  bool countstar = false;
  ColumnRef operand;

  bool operator==(const AggApply&) const = default;
};

struct OutputExpr {
  std::variant<ColumnRef, AggApply> expr;
  std::optional<std::string> alias;

  bool operator==(const OutputExpr&) const = default;
};

struct SortKey {
  ColumnRef ref;
  bool descending = false;

  bool operator==(const SortKey&) const = default;
};

struct ScanArgs {
  std::string table;
  std::optional<Predicate> predicate;
  bool distinct = false;
  std::vector<OutputExpr> outputs;

  bool operator==(const ScanArgs&) const = default;
};

struct FilterArgs {
  Predicate predicate;
  bool distinct = false;
  std::vector<OutputExpr> outputs;

  bool operator==(const FilterArgs&) const = default;
};

struct AggregateArgs {
  std::vector<ColumnRef> group_by;
  std::vector<OutputExpr> outputs;

  bool operator==(const AggregateArgs&) const = default;
};

struct JoinArgs {
  Predicate predicate;
  std::vector<OutputExpr> outputs;

  bool operator==(const JoinArgs&) const = default;
};

// Shared by Except, Intersect and Union.
struct SetOpArgs {
  std::vector<OutputExpr> outputs;

  bool operator==(const SetOpArgs&) const = default;
};

struct SortArgs {
  std::vector<SortKey> keys;
  std::vector<OutputExpr> outputs;

  bool operator==(const SortArgs&) const = default;
};

struct TopSortArgs {
  int64_t rows = 1;
  std::vector<SortKey> keys;
  std::vector<OutputExpr> outputs;

  bool operator==(const TopSortArgs&) const = default;
};

using OperatorArgs = std::variant<ScanArgs, FilterArgs, AggregateArgs, JoinArgs,
                                  SetOpArgs, SortArgs, TopSortArgs>;

struct Plan {
  OpKind op = OpKind::Scan;
  std::vector<Plan> children;
  OperatorArgs args;

  const std::vector<OutputExpr>& outputs() const;

  bool operator==(const Plan&) const = default;
};

// Tree metrics. depth is 0 for a leaf, step_count the node count.
int depth(const Plan& plan);
int step_count(const Plan& plan);
OpKind root_operator(const Plan& plan);

// Every node of the tree in bottom-up (post-order, left to right) order;
// the last element is the root.
std::vector<const Plan*> sub_plans(const Plan& plan);

// Structural well-formedness: child counts match operator arity, output
// lists are non-empty, TopSort k >= 1, sort key lists non-empty, scan table
// named. Returns a list of violations (empty when well formed).
std::vector<std::string> structural_errors(const Plan& plan);

}  // namespace qpl
