#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qpl/interpreter.hpp"
#include "qpl/plan.hpp"
#include "qpl/schema.hpp"
#include "qpl/sql_backend.hpp"

namespace qpl {

struct DatasetEntry {
  std::string db_id;
  std::string question;
  std::string gold_qpl;
  std::optional<std::string> prediction;
};

struct DatasetLoadResult {
  std::vector<DatasetEntry> entries;
  std::vector<std::string> errors;  // malformed lines, with line numbers
};

// JSON Lines, one {db_id, question, qpl[, prediction]} object per line.
DatasetLoadResult load_dataset_jsonl(const std::string& path);

// Cell-level equivalence used everywhere results are compared: null = null,
// integers exact, reals within 1e-6 relative (1e-9 absolute floor), text
// byte-wise. Integer-vs-real compares numerically.
bool cells_match(const Value& a, const Value& b);

// Unordered mode compares row multisets, ordered mode exact row sequences.
// Arity mismatch is false, never an error.
bool execution_match(const Relation& gold, const Relation& pred, bool ordered);

// Interprets both plans; ordered comparison is triggered by the gold root
// being Sort/TopSort, in which case the sort-key columns present in the
// output must agree position by position and the full rows as a multiset
// (ties may be emitted in any order). An invalid prediction is a non-match
// with a reason, not an error.
bool compare_plans(const Plan& gold, const Plan& pred, const Database& db,
                   std::string* reason = nullptr);

// Lazily loads <schemas_dir>/<db_id>.json and <data_dir>/<db_id>/<table>.csv.
class DatabaseRegistry {
 public:
  DatabaseRegistry(std::string schemas_dir, std::string data_dir)
      : schemas_dir_(std::move(schemas_dir)), data_dir_(std::move(data_dir)) {}

  const Database& database(const std::string& db_id);

 private:
  std::string schemas_dir_;
  std::string data_dir_;
  std::map<std::string, Database> cache_;
};

struct DepthRow {
  int depth = 0;
  size_t count = 0;
  size_t matches = 0;
  double rate = 0.0;
};

struct OperatorRow {
  OpKind op = OpKind::Scan;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  size_t support = 0;
};

struct EvalFailure {
  size_t index = 0;
  std::string kind;  // gold-parse | gold-validation | missing | parse | validation | mismatch
  std::string message;
};

struct EvalReport {
  size_t total = 0;    // entries with usable gold plans
  size_t matched = 0;
  double overall = 0.0;
  std::vector<DepthRow> by_depth;
  std::vector<OperatorRow> by_operator;  // Table-4 order (alphabetical)
  double root_accuracy = 0.0;
  size_t root_support = 0;  // entries whose prediction parsed
  std::vector<EvalFailure> failures;
  size_t skipped = 0;  // entries whose gold failed to parse/validate
};

EvalReport evaluate_dataset(const std::vector<DatasetEntry>& entries,
                            DatabaseRegistry& registry);

struct DatasetStats {
  std::map<int, size_t> by_depth;
  int max_steps = 0;
  std::vector<EvalFailure> errors;  // unparseable gold entries by index
};

DatasetStats dataset_stats(const std::vector<DatasetEntry>& entries);

// Plain-text tables mirroring the depth-histogram and per-operator report
// layouts, plus the machine-readable JSON report.
std::string render_depth_table(const EvalReport& report);
std::string render_operator_table(const EvalReport& report);
std::string render_stats_table(const DatasetStats& stats);
std::string report_to_json(const EvalReport& report);

struct DiffMismatch {
  size_t trial = 0;
  std::string plan_text;
  std::string sql;
  std::string reason;
};

struct DiffReport {
  size_t trials = 0;
  std::vector<DiffMismatch> mismatches;
  std::map<std::string, size_t> op_counts;  // operator occurrences across trials
};

// Differential testing: for each generated (schema, database, plan) triple,
// the reference interpreter's result must execution-match the backend's
// execution of the compiled CTE program.
DiffReport differential_test(uint64_t seed, size_t trials, SqlBackend& backend);

}  // namespace qpl
