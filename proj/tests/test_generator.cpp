#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "qpl/generator.hpp"
#include "qpl/parser.hpp"
#include "qpl/validator.hpp"

using namespace qpl;

TEST_CASE("generated cases validate by construction") {
  PlanGenerator gen(101);
  for (int i = 0; i < 150; ++i) {
    GeneratedCase c = gen.next();
    ValidationReport report = validate(c.plan, c.schema);
    CAPTURE(serialize(c.plan));
    REQUIRE(report.ok);
  }
}

TEST_CASE("exact depth generation") {
  PlanGenerator gen(102);
  for (int d = 0; d <= 5; ++d) {
    for (int i = 0; i < 10; ++i) {
      GeneratedCase c = gen.next_with_depth(d);
      CHECK(depth(c.plan) == d);
    }
  }
}

TEST_CASE("databases conform to their schemas") {
  PlanGenerator gen(103);
  for (int i = 0; i < 30; ++i) {
    Schema schema = gen.generate_schema();
    Database db = gen.generate_database(schema);
    for (const Table& t : schema.tables) {
      const TableData& data = db.table_data(t.name);
      CHECK(data.rows.size() <= 50);
      for (const auto& row : data.rows) {
        REQUIRE(row.size() == t.columns.size());
        for (size_t c = 0; c < row.size(); ++c) {
          if (row[c].is_null()) continue;
          switch (t.columns[c].dtype) {
            case Dtype::Integer: CHECK(row[c].is_integer()); break;
            case Dtype::Real: CHECK(row[c].is_real()); break;
            case Dtype::Boolean: CHECK(row[c].is_boolean()); break;
            case Dtype::Text:
            case Dtype::Date: CHECK(row[c].is_text()); break;
          }
        }
      }
    }
  }
}

TEST_CASE("a 500-case corpus covers all nine operators") {
  PlanGenerator gen(104);
  std::map<OpKind, size_t> counts;
  for (int i = 0; i < 500; ++i) {
    GeneratedCase c = gen.next();
    for (const Plan* node : sub_plans(c.plan)) counts[node->op]++;
  }
  for (OpKind op : {OpKind::Scan, OpKind::Aggregate, OpKind::Filter, OpKind::Join,
                    OpKind::Except, OpKind::Intersect, OpKind::Union, OpKind::Sort,
                    OpKind::TopSort}) {
    CAPTURE(op_name(op));
    CHECK(counts[op] > 0);
  }
}

TEST_CASE("generation is deterministic per seed") {
  PlanGenerator a(77);
  PlanGenerator b(77);
  for (int i = 0; i < 10; ++i) {
    GeneratedCase ca = a.next();
    GeneratedCase cb = b.next();
    CHECK(serialize(ca.plan) == serialize(cb.plan));
    CHECK(ca.schema.tables.size() == cb.schema.tables.size());
  }
}
