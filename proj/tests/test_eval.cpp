#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "qpl/eval.hpp"
#include "qpl/generator.hpp"
#include "test_util.hpp"

using namespace qpl;

namespace {

Relation single_cell(Value v) {
  Relation r;
  r.signature = {{"x", v.is_real() ? Dtype::Real : Dtype::Integer}};
  r.rows.push_back({std::move(v)});
  return r;
}

Relation two_rows(bool swapped) {
  Relation r;
  r.signature = {{"a", Dtype::Integer}, {"b", Dtype::Text}};
  std::vector<Value> r1 = {Value::integer(1), Value::text("a")};
  std::vector<Value> r2 = {Value::integer(2), Value::text("b")};
  if (swapped) std::swap(r1, r2);
  r.rows.push_back(std::move(r1));
  r.rows.push_back(std::move(r2));
  return r;
}

}  // namespace

TEST_CASE("execution_match basics") {
  CHECK(execution_match(single_cell(Value::real(17.5)), single_cell(Value::real(17.5)), false));
  CHECK(execution_match(two_rows(false), two_rows(true), false));   // multiset
  CHECK(!execution_match(two_rows(false), two_rows(true), true));   // sequence
  CHECK(execution_match(two_rows(false), two_rows(false), true));

  // arity mismatch is false, not an error
  Relation wide;
  wide.signature = {{"a", Dtype::Integer}, {"b", Dtype::Integer}};
  CHECK(!execution_match(single_cell(Value::integer(1)), wide, false));
}

TEST_CASE("real tolerance is 1e-6 relative") {
  // oracle: |17.5 - 17.5000001| / 17.5 = 5.7e-9 < 1e-6
  CHECK(execution_match(single_cell(Value::real(17.5)), single_cell(Value::real(17.5000001)),
                        false));
  // |17.5 - 17.6| / 17.6 = 5.7e-3 > 1e-6
  CHECK(!execution_match(single_cell(Value::real(17.5)), single_cell(Value::real(17.6)),
                         false));
  // integers are exact
  CHECK(!execution_match(single_cell(Value::integer(17)), single_cell(Value::integer(18)),
                         false));
  // integer vs real compares numerically
  CHECK(cells_match(Value::integer(17), Value::real(17.0)));
  CHECK(cells_match(Value::null(), Value::null()));
  CHECK(!cells_match(Value::null(), Value::integer(0)));
  CHECK(!cells_match(Value::text("1"), Value::integer(1)));
}

TEST_CASE("execution_match is reflexive, symmetric and permutation-invariant") {
  PlanGenerator gen(71);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 25; ++i) {
    GeneratedCase c = gen.next();
    Relation r = interpret(c.plan, c.database);
    CHECK(execution_match(r, r, false));
    CHECK(execution_match(r, r, true));
    Relation shuffled = r;
    std::shuffle(shuffled.rows.begin(), shuffled.rows.end(), rng);
    CHECK(execution_match(r, shuffled, false));
    CHECK(execution_match(shuffled, r, false));
  }
}

TEST_CASE("ordered match implies unordered match") {
  PlanGenerator gen(72);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 40; ++i) {
    GeneratedCase c = gen.next();
    Relation a = interpret(c.plan, c.database);
    Relation b = a;
    if (!b.rows.empty() && rng() % 2) std::shuffle(b.rows.begin(), b.rows.end(), rng);
    if (execution_match(a, b, true)) CHECK(execution_match(a, b, false));
  }
}

TEST_CASE("compare_plans on the fixture") {
  Database db = test::museum_db();
  Plan gold = test::fig1_plan();
  CHECK(compare_plans(gold, gold, db));

  // oracle: level-2 sum is 7.0, level-1 sum is 17.5
  std::string variant_text = test::fig1_text();
  size_t pos = variant_text.find("= 1");
  variant_text.replace(pos, 3, "= 2");
  Plan variant = test::must_parse(variant_text);
  Relation v = interpret(variant, db);
  CHECK(v.rows[0][0].as_real() == doctest::Approx(7.0));
  std::string reason;
  CHECK(!compare_plans(gold, variant, db, &reason));
  CHECK(!reason.empty());

  // an invalid prediction is a reasoned non-match
  Plan invalid = test::must_parse("Scan Table [visitor] Output [Name]");
  CHECK(!compare_plans(gold, invalid, db, &reason));
  CHECK(reason.find("validation") != std::string::npos);
}

TEST_CASE("ordered comparison tolerates tie reordering below the keys") {
  Database db = test::museum_db();
  // gold sorts joined rows by spend; the prediction swaps the join inputs
  Plan gold = test::must_parse(
      "[ [ Scan Table [visitor] Output [ID], Scan Table [visit] Output [visitor_ID, "
      "Total_spent] ] Into: Join Predicate [visitor.ID = visit.visitor_ID] Output "
      "[visit.Total_spent] ] Into: Sort OrderBy [visit.Total_spent ASC] Output "
      "[visit.Total_spent]");
  Plan pred = test::must_parse(
      "[ [ Scan Table [visit] Output [visitor_ID, Total_spent], Scan Table [visitor] Output "
      "[ID] ] Into: Join Predicate [visitor.ID = visit.visitor_ID] Output "
      "[visit.Total_spent] ] Into: Sort OrderBy [visit.Total_spent ASC] Output "
      "[visit.Total_spent]");
  CHECK(compare_plans(gold, pred, db));

  // but a wrong order on the key column fails
  Plan desc = test::must_parse(
      "[ [ Scan Table [visitor] Output [ID], Scan Table [visit] Output [visitor_ID, "
      "Total_spent] ] Into: Join Predicate [visitor.ID = visit.visitor_ID] Output "
      "[visit.Total_spent] ] Into: Sort OrderBy [visit.Total_spent DESC] Output "
      "[visit.Total_spent]");
  CHECK(!compare_plans(gold, desc, db));
}

TEST_CASE("compare_plans is reflexive over a generated corpus") {
  PlanGenerator gen(73);
  for (int i = 0; i < 40; ++i) {
    GeneratedCase c = gen.next();
    CAPTURE(serialize(c.plan));
    CHECK(compare_plans(c.plan, c.plan, c.database));
  }
}

namespace {

// Writes the museum fixture dataset with the given predictions and returns
// entries; db registry points at the fixture directories.
std::vector<DatasetEntry> museum_entries(
    const std::vector<std::pair<std::string, std::string>>& gold_and_pred) {
  std::vector<DatasetEntry> entries;
  for (const auto& [gold, pred] : gold_and_pred) {
    DatasetEntry e;
    e.db_id = "museum_visit";
    e.question = "q";
    e.gold_qpl = gold;
    if (!pred.empty()) e.prediction = pred;
    entries.push_back(std::move(e));
  }
  return entries;
}

DatabaseRegistry museum_registry() {
  return DatabaseRegistry(test::fixture_path("schemas"), test::fixture_path("data"));
}

}  // namespace

TEST_CASE("gold-as-prediction evaluates to exactly 1.0") {
  std::string fig1 = test::fig1_text();
  std::string leaf = "Scan Table [visitor] Output [ID]";
  auto entries = museum_entries({{fig1, fig1}, {leaf, leaf}});
  DatabaseRegistry registry = museum_registry();
  EvalReport report = evaluate_dataset(entries, registry);
  CHECK(report.total == 2);
  CHECK(report.matched == 2);
  CHECK(report.overall == 1.0);
  for (const OperatorRow& row : report.by_operator) {
    CHECK(row.precision == 1.0);
    CHECK(row.recall == 1.0);
    CHECK(row.f1 == 1.0);
  }
  CHECK(report.root_accuracy == 1.0);
}

TEST_CASE("the 3-entry confusion fixture reproduces the hand-computed table") {
  // gold roots: Join, Scan, Scan; predicted roots: Join, Scan, Join.
  std::string join_plan =
      "[ Scan Table [visitor] Output [ID], Scan Table [visit] Output [visitor_ID, "
      "Total_spent] ] Into: Join Predicate [visitor.ID = visit.visitor_ID] Output "
      "[visit.Total_spent]";
  std::string scan_plan = "Scan Table [visitor] Output [ID]";
  auto entries = museum_entries({
      {join_plan, join_plan},
      {scan_plan, scan_plan},
      {scan_plan, join_plan},
  });
  DatabaseRegistry registry = museum_registry();
  EvalReport report = evaluate_dataset(entries, registry);

  // hand-computed confusion: Scan TP=1 FP=0 FN=1; Join TP=1 FP=1 FN=0
  REQUIRE(report.by_operator.size() == 2);
  const OperatorRow& join_row = report.by_operator[0];
  CHECK(op_name(join_row.op) == std::string("Join"));
  CHECK(join_row.precision == 0.5);
  CHECK(join_row.recall == 1.0);
  CHECK(join_row.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(join_row.support == 1);
  const OperatorRow& scan_row = report.by_operator[1];
  CHECK(op_name(scan_row.op) == std::string("Scan"));
  CHECK(scan_row.precision == 1.0);
  CHECK(scan_row.recall == 0.5);
  CHECK(scan_row.f1 == doctest::Approx(2.0 / 3.0));
  CHECK(scan_row.support == 2);
  CHECK(report.root_accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(report.matched == 2);

  // per-operator support sums to the entries with parseable predictions
  size_t support_sum = 0;
  for (const OperatorRow& row : report.by_operator) support_sum += row.support;
  CHECK(support_sum == report.root_support);
  CHECK(report.root_support == 3);

  std::string table = render_operator_table(report);
  CHECK(table.find("0.50 1.00 0.67 1") != std::string::npos);
}

TEST_CASE("failures are categorized") {
  std::string fig1 = test::fig1_text();
  auto entries = museum_entries({
      {fig1, "Scan Column ["},                        // parse failure
      {fig1, "Scan Table [visitor] Output [Name]"},   // validation failure
      {fig1, "Scan Table [visitor] Output [ID]"},     // execution mismatch
      {fig1, ""},                                     // missing prediction
      {"Scan nonsense", fig1},                        // bad gold: skipped
  });
  DatabaseRegistry registry = museum_registry();
  EvalReport report = evaluate_dataset(entries, registry);
  CHECK(report.total == 4);
  CHECK(report.skipped == 1);
  CHECK(report.matched == 0);
  REQUIRE(report.failures.size() == 5);
  CHECK(report.failures[0].kind == "parse");
  CHECK(report.failures[1].kind == "validation");
  CHECK(report.failures[2].kind == "mismatch");
  CHECK(report.failures[3].kind == "missing");
  CHECK(report.failures[4].kind == "gold-parse");
}

TEST_CASE("per-depth buckets count and rate correctly") {
  std::string fig1 = test::fig1_text();  // depth 2
  std::string leaf = "Scan Table [visitor] Output [ID]";
  std::string wrong_leaf = "Scan Table [visitor] Output [Level_of_membership]";
  auto entries = museum_entries({
      {fig1, fig1},
      {leaf, leaf},
      {leaf, wrong_leaf},
  });
  DatabaseRegistry registry = museum_registry();
  EvalReport report = evaluate_dataset(entries, registry);
  REQUIRE(report.by_depth.size() == 2);
  CHECK(report.by_depth[0].depth == 0);
  CHECK(report.by_depth[0].count == 2);
  CHECK(report.by_depth[0].matches == 1);
  CHECK(report.by_depth[0].rate == 0.5);
  CHECK(report.by_depth[1].depth == 2);
  CHECK(report.by_depth[1].count == 1);
  CHECK(report.by_depth[1].rate == 1.0);
  CHECK(report.overall == doctest::Approx(2.0 / 3.0));
  size_t sum = 0;
  for (const auto& row : report.by_depth) sum += row.count;
  CHECK(sum == report.total);
}

TEST_CASE("dataset_stats histograms by depth") {
  std::string fig1 = test::fig1_text();
  std::string leaf = "Scan Table [visitor] Output [ID]";
  auto entries = museum_entries({{fig1, ""}, {leaf, ""}});
  DatasetStats stats = dataset_stats(entries);
  CHECK(stats.by_depth == std::map<int, size_t>{{0, 1}, {2, 1}});
  CHECK(stats.max_steps == 4);

  DatasetStats empty = dataset_stats({});
  CHECK(empty.by_depth.empty());
  CHECK(empty.errors.empty());

  auto broken = museum_entries({{"Scan nonsense", ""}, {leaf, ""}});
  DatasetStats with_errors = dataset_stats(broken);
  CHECK(with_errors.errors.size() == 1);
  CHECK(with_errors.errors[0].index == 0);
  CHECK(with_errors.by_depth == std::map<int, size_t>{{0, 1}});
}

TEST_CASE("jsonl loading tolerates malformed lines") {
  std::string path = "tmp_dataset.jsonl";  // test working directory
  {
    std::ofstream out(path, std::ios::binary);
    out << R"({"db_id":"museum_visit","question":"q","qpl":"Scan Table [visitor] Output [ID]"})"
        << "\n";
    out << "not json\n";
    out << "\n";
    out << R"({"db_id":"museum_visit","qpl":"Scan Table [visit] Output [visitor_ID]","prediction":"Scan Table [visit] Output [visitor_ID]"})"
        << "\n";
  }
  DatasetLoadResult loaded = load_dataset_jsonl(path);
  CHECK(loaded.entries.size() == 2);
  CHECK(loaded.errors.size() == 1);
  CHECK(!loaded.entries[0].prediction);
  CHECK(loaded.entries[1].prediction.has_value());
}

TEST_CASE("json report carries the documented schema") {
  std::string fig1 = test::fig1_text();
  auto entries = museum_entries({{fig1, fig1}});
  DatabaseRegistry registry = museum_registry();
  EvalReport report = evaluate_dataset(entries, registry);
  nlohmann::json doc = nlohmann::json::parse(report_to_json(report));
  CHECK(doc.contains("overall"));
  CHECK(doc.contains("by_depth"));
  CHECK(doc.contains("by_operator"));
  CHECK(doc.contains("failures"));
  CHECK(doc["overall"] == 1.0);
  CHECK(doc["by_depth"][0]["depth"] == 2);
  CHECK(doc["by_depth"][0]["count"] == 1);
  CHECK(doc["by_depth"][0]["rate"] == 1.0);
  CHECK(doc["by_operator"][0]["op"] == "Aggregate");
  CHECK(doc["by_operator"][0]["support"] == 1);
}

TEST_CASE("differential testing passes on a small run") {
  SqliteBackend backend;
  DiffReport report = differential_test(2024, 60, backend);
  CHECK(report.trials == 60);
  for (const DiffMismatch& m : report.mismatches) {
    CAPTURE(m.plan_text);
    CAPTURE(m.sql);
    CAPTURE(m.reason);
    CHECK(false);
  }
  CHECK(report.mismatches.empty());

  DiffReport none = differential_test(1, 0, backend);
  CHECK(none.trials == 0);
  CHECK(none.mismatches.empty());
}

namespace {

// A backend that silently turns EXCEPT into UNION: a broken set-difference.
class BrokenExceptBackend final : public SqlBackend {
 public:
  BackendResult execute(const std::string& sql) override {
    std::string mutated = sql;
    for (size_t pos = mutated.find(" EXCEPT "); pos != std::string::npos;
         pos = mutated.find(" EXCEPT ", pos + 1)) {
      mutated.replace(pos, 8, " UNION ");
    }
    return inner_.execute(mutated);
  }

 private:
  SqliteBackend inner_;
};

}  // namespace

TEST_CASE("differential testing detects broken set-difference semantics") {
  BrokenExceptBackend backend;
  DiffReport report = differential_test(2024, 200, backend);
  REQUIRE(report.op_counts["Except"] > 0);
  CHECK(!report.mismatches.empty());
}
