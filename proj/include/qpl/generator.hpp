#pragma once

#include <cstdint>
#include <random>

#include "qpl/plan.hpp"
#include "qpl/schema.hpp"

namespace qpl {

struct GeneratedCase {
  Schema schema;
  Database database;
  Plan plan;
};

// Seeded generator of validated (schema, database, plan) triples: schemas of
// 1-3 tables with 2-5 columns and a foreign key where possible, contents of
// up to max_rows rows, plans covering all nine operators. Every returned
// plan validates against its schema by construction; predicate literals are
// sampled from the generated data so filters keep useful selectivity.
class PlanGenerator {
 public:
  explicit PlanGenerator(uint64_t seed) : rng_(seed) {}

  GeneratedCase next();
  GeneratedCase next_with_depth(int depth);

  Schema generate_schema();
  Database generate_database(const Schema& schema, size_t max_rows = 50);
  Plan generate_plan(const Database& db, int depth);

 private:
  std::mt19937_64 rng_;
  int alias_counter_ = 0;
};

}  // namespace qpl
