#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "qpl/plan.hpp"
#include "qpl/schema.hpp"

namespace qpl {

// Row-limit spelling; everything else in the emitted SQL is common CTE
// subset (WITH, SELECT, JOIN..ON, WHERE, GROUP BY, ORDER BY, set ops).
enum class SqlDialect { Sqlite, Ansi };

struct CteClause {
  std::string name;        // Step_<i>, bottom-up
  std::string select_sql;  // one single-clause SELECT
};

struct CteProgram {
  std::vector<CteClause> clauses;
  std::string final_select;  // reads the last clause
};

class CompileError : public std::runtime_error {
 public:
  explicit CompileError(const std::string& what) : std::runtime_error(what) {}
};

// Deterministic bottom-up translation: one CTE clause per plan node, named
// Step_1..Step_n in sub_plans order. Column names inside clauses follow the
// table_column scheme (dots replaced by underscores); aggregate outputs
// without an alias become agg_<position>. The plan must validate.
CteProgram compile(const Plan& plan, const Schema& schema,
                   SqlDialect dialect = SqlDialect::Sqlite);

// Renders "WITH <name> AS (<select>), ... <final select>" byte-
// deterministically.
std::string render(const CteProgram& program);

// SQL literal spelling shared with the database loader.
std::string sql_literal(const Value& v);

// Double-quoted identifier.
std::string sql_quote(const std::string& name);

}  // namespace qpl
