#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qpl/generator.hpp"
#include "qpl/interpreter.hpp"
#include "qpl/validator.hpp"
#include "test_util.hpp"

using namespace qpl;

TEST_CASE("the figure plan validates and synthesizes the documented signatures") {
  Schema schema = test::museum_schema();
  Plan plan = test::fig1_plan();
  ValidationReport report = validate(plan, schema);
  REQUIRE(report.ok);
  REQUIRE(report.step_signatures.size() == 4);

  // leaves
  CHECK(report.step_signatures[0] ==
        ColumnSignature{{"visitor.ID", Dtype::Integer}});
  CHECK(report.step_signatures[1] ==
        ColumnSignature{{"visit.visitor_ID", Dtype::Integer},
                        {"visit.Total_spent", Dtype::Real}});
  // join sub-plan keeps pass-through qualified naming
  CHECK(report.step_signatures[2] == ColumnSignature{{"visit.Total_spent", Dtype::Real}});
  // root
  CHECK(report.step_signatures[3] ==
        ColumnSignature{{"SUM(visit.Total_spent)", Dtype::Real}});
  CHECK(output_signature(plan, schema) == report.step_signatures[3]);
}

TEST_CASE("a non-existent column in a leaf output fails") {
  Schema schema = test::museum_schema();
  std::string text = test::fig1_text();
  size_t pos = text.find("Output [ID]");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 11, "Output [Name]");
  Plan plan = test::must_parse(text);
  ValidationReport report = validate(plan, schema);
  CHECK(!report.ok);
  REQUIRE(!report.diagnostics.empty());
  CHECK(report.diagnostics.front().message.find("Name") != std::string::npos);
}

TEST_CASE("dataflow visibility: a column dropped by a child is gone") {
  Schema schema = test::museum_schema();
  // The visit-side scan omits Total_spent, so the Join may not output it.
  Plan plan = test::must_parse(
      "[ Scan Table [visitor] Output [ID], Scan Table [visit] Output [visitor_ID] ] Into: "
      "Join Predicate [visitor.ID = visit.visitor_ID] Output [visit.Total_spent]");
  ValidationReport report = validate(plan, schema);
  CHECK(!report.ok);
  CHECK(report.diagnostics.front().message.find("visit.Total_spent") != std::string::npos);
}

TEST_CASE("output_signature of sub-plans matches the figure") {
  Schema schema = test::museum_schema();
  Plan join = test::fig1_plan().children[0];
  CHECK(output_signature(join, schema) == ColumnSignature{{"visit.Total_spent", Dtype::Real}});

  Plan leaf = test::must_parse("Scan Table [visit] Output [visitor_ID, Total_spent]");
  CHECK(output_signature(leaf, schema).size() == 2);

  Plan countstar = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID] ] Into: Aggregate Output [COUNT(*)]");
  CHECK(output_signature(countstar, schema) ==
        ColumnSignature{{"COUNT(*)", Dtype::Integer}});
}

TEST_CASE("aggregate typing rules") {
  Schema schema = test::museum_schema();
  // SUM over integer widens to real
  Plan sum_int = test::must_parse(
      "[ Scan Table [visitor] Output [ID] ] Into: Aggregate Output [SUM(visitor.ID)]");
  CHECK(output_signature(sum_int, schema)[0].dtype == Dtype::Real);
  // MIN preserves dtype
  Plan min_int = test::must_parse(
      "[ Scan Table [visitor] Output [ID] ] Into: Aggregate Output [MIN(visitor.ID)]");
  CHECK(output_signature(min_int, schema)[0].dtype == Dtype::Integer);
  // COUNT is integer
  Plan cnt = test::must_parse(
      "[ Scan Table [visit] Output [Total_spent] ] Into: Aggregate Output "
      "[COUNT(visit.Total_spent)]");
  CHECK(output_signature(cnt, schema)[0].dtype == Dtype::Integer);
}

TEST_CASE("group-by discipline") {
  Schema schema = test::museum_schema();
  // a bare output column must appear in GroupBy
  Plan bad = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID, Total_spent] ] Into: Aggregate GroupBy "
      "[visit.visitor_ID] Output [visit.Total_spent, SUM(visit.Total_spent)]");
  CHECK(!validate(bad, schema).ok);

  Plan good = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID, Total_spent] ] Into: Aggregate GroupBy "
      "[visit.visitor_ID] Output [visit.visitor_ID, SUM(visit.Total_spent)]");
  CHECK(validate(good, schema).ok);

  // repeating a group-by column under an alias is permitted
  Plan aliased = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID] ] Into: Aggregate GroupBy "
      "[visit.visitor_ID] Output [visit.visitor_ID AS who, COUNT(*)]");
  CHECK(validate(aliased, schema).ok);
}

TEST_CASE("comparison dtype discipline") {
  Schema schema = test::museum_schema();
  CHECK(!validate(test::must_parse(
                      "Scan Table [visitor] Predicate [visitor.ID = 'x'] Output [ID]"),
                  schema)
             .ok);
  CHECK(!validate(test::must_parse(
                      "Scan Table [visitor] Predicate [visitor.ID LIKE 'x%'] Output [ID]"),
                  schema)
             .ok);
  CHECK(validate(test::must_parse(
                     "Scan Table [visitor] Predicate [visitor.ID = NULL] Output [ID]"),
                 schema)
            .ok);  // null literal compares with anything
  CHECK(!validate(test::must_parse(
                      "Scan Table [visitor] Predicate [visitor.ID IN (1, 'x')] Output [ID]"),
                  schema)
             .ok);
}

TEST_CASE("set operations demand equal arity and compatible columns") {
  Schema schema = test::museum_schema();
  CHECK(!validate(test::must_parse(
                      "[ Scan Table [visitor] Output [ID, Level_of_membership], Scan Table "
                      "[visit] Output [visitor_ID] ] Into: Union Output [visitor.ID]"),
                  schema)
             .ok);
  // integer vs real unifies to real
  Plan mixed = test::must_parse(
      "[ Scan Table [visitor] Output [ID], Scan Table [visit] Output [Total_spent] ] Into: "
      "Union Output [visitor.ID]");
  CHECK(output_signature(mixed, schema)[0].dtype == Dtype::Real);
  // integer vs text does not unify
  CHECK(!validate(test::must_parse(
                      "[ Scan Table [visitor] Output [ID], Scan Table [visit] Output "
                      "[visitor_ID] ] Into: Union Output [visitor.Level_of_membership]"),
                  schema)
             .ok);  // output not the left child's column at that position
}

TEST_CASE("join name collisions require aliasing") {
  Schema schema = test::museum_schema();
  Plan collide = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID], Scan Table [visit] Output [visitor_ID] ] "
      "Into: Join Predicate [visit.visitor_ID = visit.visitor_ID] Output [visit.visitor_ID]");
  CHECK(!validate(collide, schema).ok);

  Plan aliased = test::must_parse(
      "[ Scan Table [visit] Output [visitor_ID], Scan Table [visit] Output [visitor_ID AS "
      "other] ] Into: Join Predicate [visit.visitor_ID = other] Output [visit.visitor_ID, "
      "other]");
  CHECK(validate(aliased, schema).ok);
}

TEST_CASE("signature determinism and arity invariant") {
  Schema schema = test::museum_schema();
  Plan plan = test::fig1_plan();
  ValidationReport a = validate(plan, schema);
  ValidationReport b = validate(plan, schema);
  CHECK(a.ok == b.ok);
  CHECK(a.step_signatures == b.step_signatures);
  auto nodes = sub_plans(plan);
  for (size_t i = 0; i < nodes.size(); ++i) {
    CHECK(a.step_signatures[i].size() == nodes[i]->outputs().size());
  }
}

TEST_CASE("sub-plan closure over a generated corpus") {
  PlanGenerator gen(3);
  for (int i = 0; i < 80; ++i) {
    GeneratedCase c = gen.next();
    REQUIRE(validate(c.plan, c.schema).ok);
    for (const Plan* sub : sub_plans(c.plan)) {
      CAPTURE(serialize(*sub));
      CHECK(validate(*sub, c.schema).ok);
    }
  }
}

TEST_CASE("validation is sound for the interpreter across fuzzed databases") {
  PlanGenerator gen(57);
  for (int i = 0; i < 25; ++i) {
    GeneratedCase c = gen.next();
    REQUIRE(validate(c.plan, c.schema).ok);
    // the same plan must execute on any database conforming to the schema
    for (int d = 0; d < 3; ++d) {
      Database other = gen.generate_database(c.schema);
      CAPTURE(serialize(c.plan));
      CHECK_NOTHROW(interpret(c.plan, other));
    }
  }
}
