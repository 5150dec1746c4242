#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "qpl/csv.hpp"
#include "qpl/generator.hpp"
#include "qpl/interpreter.hpp"
#include "test_util.hpp"

using namespace qpl;

namespace {

// Brute-force oracle for the running example: enumerate visitor x visit,
// keep membership level 1 matches, sum the spend.
double fig1_oracle(const Database& db) {
  const TableData& visitor = db.table_data("visitor");
  const TableData& visit = db.table_data("visit");
  double sum = 0;
  for (const auto& v : visitor.rows) {
    if (v[1].is_null() || v[1].as_integer() != 1) continue;
    for (const auto& w : visit.rows) {
      if (w[0].is_null() || v[0].is_null()) continue;
      if (w[0].as_integer() == v[0].as_integer() && !w[1].is_null()) {
        sum += w[1].as_real();
      }
    }
  }
  return sum;
}

}  // namespace

TEST_CASE("the figure plan computes 17.5 on the documented fixture") {
  Database db = test::museum_db();
  double expected = fig1_oracle(db);
  CHECK(expected == 17.5);

  Relation out = interpret(test::fig1_plan(), db);
  REQUIRE(out.rows.size() == 1);
  REQUIRE(out.rows[0].size() == 1);
  CHECK(out.rows[0][0].is_real());
  CHECK(out.rows[0][0].as_real() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(!out.ordered);
}

TEST_CASE("interpret_all_steps walks the example bottom-up with 2/4/3/1 rows") {
  Database db = test::museum_db();
  auto steps = interpret_all_steps(test::fig1_plan(), db);
  REQUIRE(steps.size() == 4);
  CHECK(steps[0].index == 1);
  CHECK(steps[0].relation.rows.size() == 2);  // visitors with level 1: {1, 3}
  std::set<int64_t> ids;
  for (const auto& row : steps[0].relation.rows) ids.insert(row[0].as_integer());
  CHECK(ids == std::set<int64_t>{1, 3});
  CHECK(steps[1].relation.rows.size() == 4);
  CHECK(steps[2].relation.rows.size() == 3);
  CHECK(steps[3].relation.rows.size() == 1);
  CHECK(steps[3].relation.rows == interpret(test::fig1_plan(), db).rows);
}

TEST_CASE("scan of an empty table keeps its signature") {
  Schema schema = test::museum_schema();
  Database db = load_database(schema, test::fixture_path("data/museum_empty"));
  Relation out = interpret(test::must_parse("Scan Table [visit] Output [visitor_ID]"), db);
  CHECK(out.rows.empty());
  REQUIRE(out.signature.size() == 1);
  CHECK(out.signature[0].name == "visit.visitor_ID");
}

TEST_CASE("scalar aggregates over empty input follow SQL") {
  Schema schema = test::museum_schema();
  Database db = load_database(schema, test::fixture_path("data/museum_empty"));
  Relation sum = interpret(
      test::must_parse(
          "[ Scan Table [visit] Output [Total_spent] ] Into: Aggregate Output "
          "[SUM(visit.Total_spent)]"),
      db);
  REQUIRE(sum.rows.size() == 1);
  CHECK(sum.rows[0][0].is_null());

  Relation cnt = interpret(
      test::must_parse(
          "[ Scan Table [visit] Output [Total_spent] ] Into: Aggregate Output [COUNT(*)]"),
      db);
  REQUIRE(cnt.rows.size() == 1);
  CHECK(cnt.rows[0][0] == Value::integer(0));

  // with group-by: zero output tuples
  Relation grouped = interpret(
      test::must_parse(
          "[ Scan Table [visit] Output [visitor_ID, Total_spent] ] Into: Aggregate GroupBy "
          "[visit.visitor_ID] Output [visit.visitor_ID, SUM(visit.Total_spent)]"),
      db);
  CHECK(grouped.rows.empty());
}

TEST_CASE("join of empty inputs propagates emptiness through all steps") {
  Schema schema = test::museum_schema();
  Database db = load_database(schema, test::fixture_path("data/museum_empty"));
  auto steps = interpret_all_steps(
      test::must_parse(
          "[ Scan Table [visit] Output [visitor_ID], Scan Table [visit] Output "
          "[Total_spent] ] Into: Join Predicate [visit.visitor_ID = visit.visitor_ID] "
          "Output [visit.visitor_ID]"),
      db);
  REQUIRE(steps.size() == 3);
  for (const auto& step : steps) CHECK(step.relation.rows.empty());
}

TEST_CASE("three-valued logic keeps only true rows") {
  Database db = test::museum_db();
  // null <> 1 is unknown, not true: nulls never pass a comparison filter
  Relation out = interpret(
      test::must_parse("Scan Table [visit] Predicate [visit.Total_spent > 6.0] Output "
                       "[visitor_ID, Total_spent]"),
      db);
  CHECK(out.rows.size() == 2);  // 10.0 and 7.0
}

TEST_CASE("like matching") {
  CHECK(like_match("hello", "he%"));
  CHECK(like_match("hello", "%llo"));
  CHECK(like_match("hello", "h_llo"));
  CHECK(like_match("hello", "%"));
  CHECK(!like_match("hello", "He%"));  // case-sensitive
  CHECK(!like_match("hello", "h_lo"));
  CHECK(like_match("", "%"));
  CHECK(!like_match("", "_"));
  CHECK(like_match("abc", "abc"));
  CHECK(like_match("a%c", "a%c"));
  CHECK(like_match("xxabyy", "%ab%"));
}

TEST_CASE("sort places nulls first ascending and last descending") {
  Schema schema = load_schema(
      R"({"db_id":"s","tables":[{"name":"t","columns":[{"name":"a","type":"integer"}]}]})");
  std::map<std::string, TableData> contents;
  contents["t"].rows = {{Value::integer(2)}, {Value::null()}, {Value::integer(1)}};
  Database db = make_database(schema, std::move(contents));

  Relation asc = interpret(
      test::must_parse("[ Scan Table [t] Output [a] ] Into: Sort OrderBy [t.a ASC] Output "
                       "[t.a]"),
      db);
  REQUIRE(asc.rows.size() == 3);
  CHECK(asc.rows[0][0].is_null());
  CHECK(asc.rows[1][0] == Value::integer(1));
  CHECK(asc.rows[2][0] == Value::integer(2));
  CHECK(asc.ordered);

  Relation desc = interpret(
      test::must_parse("[ Scan Table [t] Output [a] ] Into: Sort OrderBy [t.a DESC] Output "
                       "[t.a]"),
      db);
  CHECK(desc.rows[0][0] == Value::integer(2));
  CHECK(desc.rows[2][0].is_null());
}

TEST_CASE("set operations use distinct semantics with null equal to null") {
  Schema schema = load_schema(
      R"({"db_id":"s","tables":[{"name":"t","columns":[{"name":"a","type":"integer"}]},{"name":"u","columns":[{"name":"a","type":"integer"}]}]})");
  std::map<std::string, TableData> contents;
  contents["t"].rows = {{Value::integer(1)}, {Value::integer(1)}, {Value::null()},
                        {Value::null()}, {Value::integer(2)}};
  contents["u"].rows = {{Value::integer(2)}, {Value::null()}};
  Database db = make_database(schema, std::move(contents));

  auto run = [&](const char* op) {
    return interpret(test::must_parse(std::string("[ Scan Table [t] Output [a], Scan Table "
                                                  "[u] Output [a] ] Into: ") +
                                      op + " Output [t.a]"),
                     db);
  };
  Relation u = run("Union");
  CHECK(u.rows.size() == 3);  // {1, 2, null}
  Relation i = run("Intersect");
  CHECK(i.rows.size() == 2);  // {2, null}
  Relation e = run("Except");
  CHECK(e.rows.size() == 1);  // {1}
}

TEST_CASE("set-op algebra on identical children") {
  PlanGenerator gen(17);
  for (int i = 0; i < 25; ++i) {
    GeneratedCase c = gen.next_with_depth(i % 3);
    Relation base = interpret(c.plan, c.database);

    auto make_setop = [&](OpKind op) {
      Plan plan;
      plan.op = op;
      SetOpArgs args;
      for (const SignatureColumn& col : base.signature) {
        OutputExpr e;
        ColumnRef ref;
        ref.column = col.name;
        if (col.name.find('(') == std::string::npos) {
          size_t dot = col.name.find('.');
          if (dot != std::string::npos && col.name.find('.', dot + 1) == std::string::npos) {
            ref.table = col.name.substr(0, dot);
            ref.column = col.name.substr(dot + 1);
          }
        }
        e.expr = std::move(ref);
        args.outputs.push_back(std::move(e));
      }
      plan.args = std::move(args);
      plan.children.push_back(c.plan);
      plan.children.push_back(c.plan);
      return plan;
    };

    Relation inter = interpret(make_setop(OpKind::Intersect), c.database);
    Relation uni = interpret(make_setop(OpKind::Union), c.database);
    Relation exc = interpret(make_setop(OpKind::Except), c.database);

    // distinct(base) via a set comparison
    std::set<std::vector<Value>, bool (*)(const std::vector<Value>&, const std::vector<Value>&)>
        distinct(row_less);
    for (const auto& row : base.rows) distinct.insert(row);
    CHECK(inter.rows.size() == distinct.size());
    CHECK(uni.rows.size() == distinct.size());
    CHECK(exc.rows.empty());
  }
}

TEST_CASE("topsort output size and key ordering") {
  Database db = test::museum_db();
  Plan fixed = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID, Total_spent] ] Into: TopSort Rows [2] "
      "OrderBy [visit.Total_spent DESC] Output [visit.visitor_ID, visit.Total_spent]");
  Relation out = interpret(fixed, db);
  REQUIRE(out.rows.size() == 2);
  CHECK(out.rows[0][1] == Value::real(10.0));
  CHECK(out.rows[1][1] == Value::real(7.0));
  CHECK(out.ordered);

  // k larger than the input
  Plan big = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID] ] Into: TopSort Rows [99] OrderBy "
      "[visit.visitor_ID ASC] Output [visit.visitor_ID]");
  CHECK(interpret(big, db).rows.size() == 4);
}

TEST_CASE("adding rows never shrinks a scan's output") {
  Schema schema = test::museum_schema();
  Database small = load_database(schema, test::fixture_path("data/museum_empty"));
  Database big = test::museum_db();
  Plan scan = test::must_parse(
      "Scan Table [visitor] Predicate [visitor.Level_of_membership = 1] Output [ID]");
  CHECK(interpret(scan, small).rows.size() <= interpret(scan, big).rows.size());
}

TEST_CASE("interpret_all_steps last element equals interpret on generated plans") {
  PlanGenerator gen(41);
  for (int i = 0; i < 40; ++i) {
    GeneratedCase c = gen.next();
    Relation direct = interpret(c.plan, c.database);
    auto steps = interpret_all_steps(c.plan, c.database);
    REQUIRE(steps.size() == static_cast<size_t>(step_count(c.plan)));
    CHECK(steps.back().relation.rows == direct.rows);
    CHECK(steps.back().relation.signature == direct.signature);
  }
}

TEST_CASE("relation csv output re-reads losslessly for text-free nulls") {
  PlanGenerator gen(59);
  for (int i = 0; i < 15; ++i) {
    GeneratedCase c = gen.next_with_depth(i % 3);
    Relation r = interpret(c.plan, c.database);
    auto records = csv::read(relation_to_csv(r));
    REQUIRE(records.size() == r.rows.size() + 1);
    for (size_t row = 0; row < r.rows.size(); ++row) {
      for (size_t col = 0; col < r.rows[row].size(); ++col) {
        const Value& v = r.rows[row][col];
        const auto& field = records[row + 1][col];
        if (v.is_null()) {
          CHECK(field.text.empty());
        } else {
          CHECK(field.text == value_to_display(v));
        }
      }
    }
  }
}

TEST_CASE("relation renderings") {
  Database db = test::museum_db();
  Relation out = interpret(test::fig1_plan(), db);
  CHECK(relation_to_csv(out) == "SUM(visit.Total_spent)\n17.5\n");
  CHECK(relation_to_json(out) == "[[17.5]]");

  Schema schema = test::museum_schema();
  Database empty = load_database(schema, test::fixture_path("data/museum_empty"));
  Relation null_sum = interpret(
      test::must_parse("[ Scan Table [visit] Output [Total_spent] ] Into: Aggregate Output "
                       "[SUM(visit.Total_spent)]"),
      empty);
  CHECK(relation_to_json(null_sum) == "[[null]]");
  CHECK(relation_to_csv(null_sum) == "SUM(visit.Total_spent)\n\n");
}
