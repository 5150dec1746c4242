#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qpl/generator.hpp"
#include "qpl/plan.hpp"
#include "test_util.hpp"

using namespace qpl;

namespace {

Plan single_scan() { return test::must_parse("Scan Table [visitor] Output [ID]"); }

Plan sort_over(Plan child) {
  Plan plan;
  plan.op = OpKind::Sort;
  SortArgs args;
  args.keys.push_back({ColumnRef{std::nullopt, "SUM(visit.Total_spent)"}, true});
  OutputExpr out;
  out.expr = ColumnRef{std::nullopt, "SUM(visit.Total_spent)"};
  args.outputs.push_back(std::move(out));
  plan.args = std::move(args);
  plan.children.push_back(std::move(child));
  return plan;
}

Plan union_with_scan(Plan left) {
  Plan scan = single_scan();
  Plan plan;
  plan.op = OpKind::Union;
  SetOpArgs args;
  OutputExpr out;
  out.expr = ColumnRef{std::nullopt, "SUM(visit.Total_spent)"};
  args.outputs.push_back(std::move(out));
  plan.args = std::move(args);
  plan.children.push_back(std::move(left));
  plan.children.push_back(std::move(scan));
  return plan;
}

}  // namespace

TEST_CASE("operator taxonomy is the closed nine-element set with fixed arity") {
  CHECK(op_arity(OpKind::Scan) == 0);
  for (OpKind op : {OpKind::Aggregate, OpKind::Filter, OpKind::Sort, OpKind::TopSort}) {
    CHECK(op_arity(op) == 1);
  }
  for (OpKind op : {OpKind::Join, OpKind::Except, OpKind::Intersect, OpKind::Union}) {
    CHECK(op_arity(op) == 2);
  }
  int count = 0;
  for (const char* name : {"Scan", "Aggregate", "Filter", "Join", "Except", "Intersect",
                           "Union", "Sort", "TopSort"}) {
    CHECK(op_from_name(name).has_value());
    ++count;
  }
  CHECK(count == 9);
  CHECK(!op_from_name("OuterJoin").has_value());
  CHECK(!op_from_name("scan").has_value());  // names are case-sensitive
}

TEST_CASE("depth of the running example tree is 2") {
  Plan plan = test::fig1_plan();
  CHECK(depth(plan) == 2);
  CHECK(depth(single_scan()) == 0);
  // Oracle: recompute 1 + max(children) by hand on the 5-node tree.
  CHECK(depth(sort_over(test::fig1_plan())) == 3);
}

TEST_CASE("sub_plans enumerates every node bottom-up") {
  Plan plan = test::fig1_plan();
  auto subs = sub_plans(plan);
  REQUIRE(subs.size() == 4);
  CHECK(subs[0]->op == OpKind::Scan);
  CHECK(subs[1]->op == OpKind::Scan);
  CHECK(subs[2]->op == OpKind::Join);
  CHECK(subs[3]->op == OpKind::Aggregate);
  CHECK(subs[3] == &plan);

  CHECK(sub_plans(single_scan()).size() == 1);
  Plan join = test::must_parse(
      "[ Scan Table [a] Output [x], Scan Table [b] Output [y] ] Into: Join "
      "Predicate [a.x = b.y] Output [a.x]");
  CHECK(sub_plans(join).size() == 3);
}

TEST_CASE("step_count counts nodes") {
  Plan plan = test::fig1_plan();
  CHECK(step_count(plan) == 4);
  CHECK(step_count(single_scan()) == 1);
  // Oracle: union node + 4 nodes of the example + 1 scan = 6.
  CHECK(step_count(union_with_scan(test::fig1_plan())) == 6);
}

TEST_CASE("root_operator reads the root") {
  CHECK(root_operator(test::fig1_plan()) == OpKind::Aggregate);
  CHECK(root_operator(single_scan()) == OpKind::Scan);
  Plan top = test::must_parse(
      "[ [ Scan Table [a] Output [x], Scan Table [b] Output [y] ] Into: Join "
      "Predicate [a.x = b.y] Output [a.x] ] Into: TopSort Rows [3] OrderBy [a.x ASC] "
      "Output [a.x]");
  CHECK(root_operator(top) == OpKind::TopSort);
}

TEST_CASE("structural_errors flags arity and argument violations") {
  Plan plan = test::fig1_plan();
  CHECK(structural_errors(plan).empty());

  Plan bad = plan;
  bad.children.pop_back();  // Join with one child inside
  CHECK(!structural_errors(bad).empty());

  Plan top = single_scan();
  Plan topsort;
  topsort.op = OpKind::TopSort;
  TopSortArgs args;
  args.rows = 0;  // must be >= 1
  args.keys.push_back({ColumnRef{std::nullopt, "visitor.ID"}, false});
  OutputExpr out;
  out.expr = ColumnRef{std::nullopt, "visitor.ID"};
  args.outputs.push_back(std::move(out));
  topsort.args = std::move(args);
  topsort.children.push_back(std::move(top));
  CHECK(!structural_errors(topsort).empty());
}

TEST_CASE("metric inequalities hold over a generated corpus") {
  PlanGenerator gen(7);
  for (int i = 0; i < 120; ++i) {
    GeneratedCase c = gen.next();
    int d = depth(c.plan);
    int n = step_count(c.plan);
    CAPTURE(d);
    CAPTURE(n);
    CHECK(d < n);
    CHECK(n <= (1 << (d + 1)) - 1);  // binary-bounded arity
    CHECK(sub_plans(c.plan).size() == static_cast<size_t>(n));
    CHECK(structural_errors(c.plan).empty());
  }
}
