#include "qpl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "qpl/compiler.hpp"
#include "qpl/generator.hpp"
#include "qpl/parser.hpp"
#include "qpl/validator.hpp"

namespace qpl {

namespace {

using Row = std::vector<Value>;

constexpr double kRelTolerance = 1e-6;
constexpr double kAbsTolerance = 1e-9;

bool rows_match(const Row& a, const Row& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (!cells_match(a[i], b[i])) return false;
  }
  return true;
}

bool multiset_match(const std::vector<Row>& a, const std::vector<Row>& b) {
  if (a.size() != b.size()) return false;
  std::vector<Row> sa = a;
  std::vector<Row> sb = b;
  std::sort(sa.begin(), sa.end(), row_less);
  std::sort(sb.begin(), sb.end(), row_less);
  bool ok = true;
  for (size_t i = 0; i < sa.size() && ok; ++i) ok = rows_match(sa[i], sb[i]);
  if (ok) return true;
  // Sorting with an exact comparator can misplace rows that differ only
  // within the numeric tolerance; fall back to explicit matching.
  std::vector<bool> used(sb.size(), false);
  for (const Row& ra : sa) {
    bool found = false;
    for (size_t j = 0; j < sb.size(); ++j) {
      if (!used[j] && rows_match(ra, sb[j])) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  return true;
}

// Shared core of compare_plans and differential testing: `gold_root` and a
// fresh validation of it decide the comparison mode.
bool results_match(const Plan& gold_root, const Schema& schema, const Relation& gold,
                   const Relation& pred, std::string* reason) {
  auto set_reason = [&](const std::string& r) {
    if (reason) *reason = r;
  };
  if (gold.signature.size() != pred.signature.size()) {
    set_reason("result arity differs (" + std::to_string(gold.signature.size()) + " vs " +
               std::to_string(pred.signature.size()) + ")");
    return false;
  }
  bool ordered = gold_root.op == OpKind::Sort || gold_root.op == OpKind::TopSort;
  if (!ordered) {
    if (!multiset_match(gold.rows, pred.rows)) {
      set_reason("result multisets differ (" + std::to_string(gold.rows.size()) + " vs " +
                 std::to_string(pred.rows.size()) + " rows)");
      return false;
    }
    return true;
  }
  if (gold.rows.size() != pred.rows.size()) {
    set_reason("row counts differ (" + std::to_string(gold.rows.size()) + " vs " +
               std::to_string(pred.rows.size()) + ")");
    return false;
  }
  // Enforce the prescribed ordering on the sort-key columns that survived
  // into the output; ties may appear in either order, so the rest of the
  // comparison is a multiset.
  ValidationReport report = validate(gold_root, schema);
  const ColumnSignature& child_sig = report.step_signatures[report.step_signatures.size() - 2];
  std::vector<size_t> key_positions = ordered_key_positions(gold_root, child_sig);
  for (size_t i = 0; i < gold.rows.size(); ++i) {
    for (size_t pos : key_positions) {
      if (!cells_match(gold.rows[i][pos], pred.rows[i][pos])) {
        set_reason("sort-key ordering differs at row " + std::to_string(i + 1));
        return false;
      }
    }
  }
  if (!multiset_match(gold.rows, pred.rows)) {
    set_reason("result multisets differ under ordering");
    return false;
  }
  return true;
}

std::string first_error(const ValidationReport& report) {
  for (const Diagnostic& d : report.diagnostics) {
    if (d.severity == Severity::Error) return d.message;
  }
  return "unknown validation error";
}

}  // namespace

bool cells_match(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
  if (a.is_numeric() && b.is_numeric()) {
    if (!a.is_real() && !b.is_real()) {
      int64_t x = a.is_boolean() ? (a.as_boolean() ? 1 : 0) : a.as_integer();
      int64_t y = b.is_boolean() ? (b.as_boolean() ? 1 : 0) : b.as_integer();
      return x == y;
    }
    double x = a.numeric();
    double y = b.numeric();
    double diff = std::fabs(x - y);
    return diff <= kAbsTolerance || diff <= kRelTolerance * std::max(std::fabs(x), std::fabs(y));
  }
  if (a.is_text() && b.is_text()) return a.as_text() == b.as_text();
  return false;
}

bool execution_match(const Relation& gold, const Relation& pred, bool ordered) {
  if (gold.signature.size() != pred.signature.size()) return false;
  if (gold.rows.size() != pred.rows.size()) return false;
  if (ordered) {
    for (size_t i = 0; i < gold.rows.size(); ++i) {
      if (!rows_match(gold.rows[i], pred.rows[i])) return false;
    }
    return true;
  }
  return multiset_match(gold.rows, pred.rows);
}

bool compare_plans(const Plan& gold, const Plan& pred, const Database& db,
                   std::string* reason) {
  ValidationReport gold_report = validate(gold, db.schema);
  if (!gold_report.ok) {
    throw ValidationError("gold plan failed validation: " + first_error(gold_report));
  }
  ValidationReport pred_report = validate(pred, db.schema);
  if (!pred_report.ok) {
    if (reason) *reason = "prediction failed validation: " + first_error(pred_report);
    return false;
  }
  Relation gold_rel = interpret(gold, db);
  Relation pred_rel = interpret(pred, db);
  return results_match(gold, db.schema, gold_rel, pred_rel, reason);
}

DatasetLoadResult load_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open dataset file '" + path + "'");
  DatasetLoadResult result;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
      DatasetEntry entry;
      entry.db_id = doc.at("db_id").get<std::string>();
      entry.question = doc.value("question", "");
      entry.gold_qpl = doc.at("qpl").get<std::string>();
      if (doc.contains("prediction") && !doc.at("prediction").is_null()) {
        entry.prediction = doc.at("prediction").get<std::string>();
      }
      result.entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return result;
}

const Database& DatabaseRegistry::database(const std::string& db_id) {
  auto it = cache_.find(db_id);
  if (it != cache_.end()) return it->second;
  Schema schema = load_schema_file(schemas_dir_ + "/" + db_id + ".json");
  Database db = load_database(schema, data_dir_ + "/" + db_id);
  return cache_.emplace(db_id, std::move(db)).first->second;
}

EvalReport evaluate_dataset(const std::vector<DatasetEntry>& entries,
                            DatabaseRegistry& registry) {
  EvalReport report;
  std::map<int, std::pair<size_t, size_t>> depth_buckets;  // depth -> (count, matches)
  std::map<OpKind, std::map<OpKind, size_t>> confusion;    // gold -> pred -> n

  for (size_t i = 0; i < entries.size(); ++i) {
    const DatasetEntry& entry = entries[i];
    ParseResult gold_parse = parse(entry.gold_qpl);
    if (!gold_parse.ok()) {
      report.failures.push_back({i, "gold-parse", gold_parse.diagnostics.front().message});
      ++report.skipped;
      continue;
    }
    const Database* db = nullptr;
    try {
      db = &registry.database(entry.db_id);
    } catch (const std::exception& e) {
      report.failures.push_back({i, "gold-validation", e.what()});
      ++report.skipped;
      continue;
    }
    ValidationReport gold_report = validate(*gold_parse.plan, db->schema);
    if (!gold_report.ok) {
      report.failures.push_back({i, "gold-validation", first_error(gold_report)});
      ++report.skipped;
      continue;
    }

    ++report.total;
    int d = depth(*gold_parse.plan);
    auto& bucket = depth_buckets[d];
    ++bucket.first;

    if (!entry.prediction) {
      report.failures.push_back({i, "missing", "no prediction supplied"});
      continue;
    }
    ParseResult pred_parse = parse(*entry.prediction);
    if (!pred_parse.ok()) {
      report.failures.push_back({i, "parse", pred_parse.diagnostics.front().message});
      continue;
    }
    confusion[root_operator(*gold_parse.plan)][root_operator(*pred_parse.plan)]++;
    ++report.root_support;

    ValidationReport pred_report = validate(*pred_parse.plan, db->schema);
    if (!pred_report.ok) {
      report.failures.push_back({i, "validation", first_error(pred_report)});
      continue;
    }
    std::string reason;
    if (!compare_plans(*gold_parse.plan, *pred_parse.plan, *db, &reason)) {
      report.failures.push_back({i, "mismatch", reason});
      continue;
    }
    ++report.matched;
    ++bucket.second;
  }

  for (const auto& [d, bucket] : depth_buckets) {
    DepthRow row;
    row.depth = d;
    row.count = bucket.first;
    row.matches = bucket.second;
    row.rate = bucket.first ? static_cast<double>(bucket.second) / bucket.first : 0.0;
    report.by_depth.push_back(row);
  }
  report.overall = report.total ? static_cast<double>(report.matched) / report.total : 0.0;

  // Root-operator metrics over entries whose prediction parsed, one row per
  // operator in the fixed (alphabetical) report order.
  static const OpKind kOrder[] = {OpKind::Aggregate, OpKind::Except,  OpKind::Filter,
                                  OpKind::Intersect, OpKind::Join,    OpKind::Scan,
                                  OpKind::Sort,      OpKind::TopSort, OpKind::Union};
  size_t correct = 0;
  for (OpKind op : kOrder) {
    size_t support = 0, predicted = 0, tp = 0;
    for (const auto& [gold_op, row] : confusion) {
      for (const auto& [pred_op, n] : row) {
        if (gold_op == op) support += n;
        if (pred_op == op) predicted += n;
        if (gold_op == op && pred_op == op) tp += n;
      }
    }
    if (support == 0 && predicted == 0) continue;
    OperatorRow row;
    row.op = op;
    row.support = support;
    row.precision = predicted ? static_cast<double>(tp) / predicted : 0.0;
    row.recall = support ? static_cast<double>(tp) / support : 0.0;
    row.f1 = (row.precision + row.recall) > 0
                 ? 2 * row.precision * row.recall / (row.precision + row.recall)
                 : 0.0;
    report.by_operator.push_back(row);
    correct += tp;
  }
  report.root_accuracy =
      report.root_support ? static_cast<double>(correct) / report.root_support : 0.0;
  return report;
}

DatasetStats dataset_stats(const std::vector<DatasetEntry>& entries) {
  DatasetStats stats;
  for (size_t i = 0; i < entries.size(); ++i) {
    ParseResult result = parse(entries[i].gold_qpl);
    if (!result.ok()) {
      stats.errors.push_back({i, "gold-parse", result.diagnostics.front().message});
      continue;
    }
    stats.by_depth[depth(*result.plan)]++;
    stats.max_steps = std::max(stats.max_steps, step_count(*result.plan));
  }
  return stats;
}

namespace {

std::string pad(const std::string& s, size_t width) {
  std::string out = s;
  while (out.size() < width) out.push_back(' ');
  return out;
}

std::string percent(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f%%", rate * 100.0);
  return buf;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string render_depth_table(const EvalReport& report) {
  std::string out;
  out += pad("QPL Depth", 11) + pad("Count", 7) + "Match\n";
  for (const DepthRow& row : report.by_depth) {
    out += pad(std::to_string(row.depth), 11) + pad(std::to_string(row.count), 7) +
           percent(row.rate) + "\n";
  }
  out += pad("Overall", 11) + pad(std::to_string(report.total), 7) + percent(report.overall) +
         "\n";
  return out;
}

std::string render_operator_table(const EvalReport& report) {
  std::string out;
  out += pad("", 11) + "Precision Recall F1 Support\n";
  for (const OperatorRow& row : report.by_operator) {
    out += pad(op_name(row.op), 11) + fixed2(row.precision) + " " + fixed2(row.recall) + " " +
           fixed2(row.f1) + " " + std::to_string(row.support) + "\n";
  }
  out += pad("Accuracy", 11) + fixed2(report.root_accuracy) + " (" +
         std::to_string(report.root_support) + " predictions)\n";
  return out;
}

std::string render_stats_table(const DatasetStats& stats) {
  std::string out;
  out += pad("QPL Depth", 11) + "Count\n";
  size_t total = 0;
  for (const auto& [d, n] : stats.by_depth) {
    out += pad(std::to_string(d), 11) + std::to_string(n) + "\n";
    total += n;
  }
  out += pad("Total", 11) + std::to_string(total) + "\n";
  out += "max steps: " + std::to_string(stats.max_steps) + "\n";
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json doc;
  doc["overall"] = report.overall;
  doc["by_depth"] = nlohmann::json::array();
  for (const DepthRow& row : report.by_depth) {
    doc["by_depth"].push_back({{"depth", row.depth}, {"count", row.count}, {"rate", row.rate}});
  }
  doc["by_operator"] = nlohmann::json::array();
  for (const OperatorRow& row : report.by_operator) {
    doc["by_operator"].push_back({{"op", op_name(row.op)},
                                  {"precision", row.precision},
                                  {"recall", row.recall},
                                  {"f1", row.f1},
                                  {"support", row.support}});
  }
  doc["failures"] = nlohmann::json::array();
  for (const EvalFailure& f : report.failures) {
    doc["failures"].push_back({{"index", f.index}, {"kind", f.kind}, {"message", f.message}});
  }
  return doc.dump(2);
}

DiffReport differential_test(uint64_t seed, size_t trials, SqlBackend& backend) {
  PlanGenerator generator(seed);
  DiffReport report;
  report.trials = trials;
  for (size_t trial = 0; trial < trials; ++trial) {
    GeneratedCase c = generator.next();
    for (const Plan* node : sub_plans(c.plan)) {
      report.op_counts[op_name(node->op)]++;
    }
    std::string sql;
    std::string reason;
    bool ok = true;
    try {
      for (const std::string& stmt : database_to_sql(c.database)) backend.execute(stmt);
      CteProgram program = compile(c.plan, c.schema);
      sql = render(program);
      Relation mine = interpret(c.plan, c.database);
      BackendResult theirs = backend.execute(sql);
      if (theirs.columns.size() != mine.signature.size()) {
        reason = "backend returned " + std::to_string(theirs.columns.size()) +
                 " columns, expected " + std::to_string(mine.signature.size());
        ok = false;
      } else {
        Relation other;
        other.signature = mine.signature;
        other.rows = std::move(theirs.rows);
        other.ordered = mine.ordered;
        ok = results_match(c.plan, c.schema, mine, other, &reason);
      }
    } catch (const std::exception& e) {
      reason = e.what();
      ok = false;
    }
    if (!ok) {
      report.mismatches.push_back({trial, serialize(c.plan), sql, reason});
    }
  }
  return report;
}

}  // namespace qpl
