#include "qpl/generator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "qpl/parser.hpp"
#include "qpl/validator.hpp"

namespace qpl {

namespace {

// Reconstructs a ColumnRef from a signature display name: "t.c" splits into
// a qualified reference, aggregate forms and aliases stay verbatim.
ColumnRef ref_from_name(const std::string& name) {
  ColumnRef ref;
  if (name.find('(') == std::string::npos) {
    size_t dot = name.find('.');
    if (dot != std::string::npos && name.find('.', dot + 1) == std::string::npos) {
      ref.table = name.substr(0, dot);
      ref.column = name.substr(dot + 1);
      return ref;
    }
  }
  ref.column = name;
  return ref;
}

const char* kTextPool[] = {"red", "blue", "green", "amber", "plum", "Gray", "silver", "onyx"};
const char* kDatePool[] = {"2015-03-01", "2018-11-20", "2020-01-05", "1999-12-31",
                           "2021-07-14"};
const char* kColumnPool[] = {"name", "price", "qty", "city", "note", "flag",
                             "born", "score", "code", "rank", "label", "level"};

struct Gen {
  std::mt19937_64& rng;
  int& alias_counter;
  const Database& db;
  std::map<Dtype, std::vector<Value>> pool;

  Gen(std::mt19937_64& rng, int& alias_counter, const Database& db)
      : rng(rng), alias_counter(alias_counter), db(db) {
    for (const Table& t : db.schema.tables) {
      const TableData& data = db.table_data(t.name);
      for (const auto& row : data.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
          if (!row[i].is_null() && pool[t.columns[i].dtype].size() < 100) {
            pool[t.columns[i].dtype].push_back(row[i]);
          }
        }
      }
    }
  }

  int pick_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(pick_int(0, static_cast<int>(v.size()) - 1))];
  }

  std::string fresh_alias() { return "v" + std::to_string(++alias_counter); }

  Value random_cell(Dtype dtype) {
    switch (dtype) {
      case Dtype::Integer: return Value::integer(pick_int(-5, 20));
      case Dtype::Real: return Value::real(pick_int(-40, 80) / 4.0);
      case Dtype::Boolean: return Value::boolean(chance(0.5));
      case Dtype::Text: return Value::text(kTextPool[pick_int(0, 7)]);
      case Dtype::Date: return Value::text(kDatePool[pick_int(0, 4)]);
    }
    return Value::null();
  }

  Value sample_literal(Dtype dtype) {
    auto it = pool.find(dtype);
    if (it != pool.end() && !it->second.empty() && chance(0.8)) {
      Value v = pick(it->second);
      if (dtype == Dtype::Integer && chance(0.3)) {
        return Value::integer(v.as_integer() + pick_int(-2, 2));
      }
      if (dtype == Dtype::Boolean) return Value::integer(v.as_boolean() ? 1 : 0);
      return v;
    }
    // No data of this dtype to sample from; cook something up.
    Value v = random_cell(dtype);
    if (dtype == Dtype::Boolean) return Value::integer(v.as_boolean() ? 1 : 0);
    return v;
  }

  std::string like_pattern(Dtype dtype) {
    Value base = sample_literal(dtype);
    std::string s = base.is_text() ? base.as_text() : "";
    if (s.empty()) return "%";
    switch (pick_int(0, 3)) {
      case 0: return s.substr(0, 1 + s.size() / 2) + "%";
      case 1: return "%" + s.substr(s.size() / 2);
      case 2: {
        std::string p = s;
        p[p.size() / 2] = '_';
        return p;
      }
      default: return "%" + s.substr(s.size() / 3, 1 + s.size() / 3) + "%";
    }
  }

  Predicate atom(const ColumnSignature& sig) {
    size_t c = static_cast<size_t>(pick_int(0, static_cast<int>(sig.size()) - 1));
    ColumnRef ref = ref_from_name(sig[c].name);
    Dtype dtype = sig[c].dtype;
    int form = pick_int(0, 9);
    if (form <= 4) {  // column vs literal
      static const CompareOp ops[] = {CompareOp::Eq, CompareOp::Eq, CompareOp::Ne,
                                      CompareOp::Lt, CompareOp::Le, CompareOp::Gt,
                                      CompareOp::Ge};
      return Predicate{Comparison{ops[pick_int(0, 6)], ref, Literal{sample_literal(dtype)}}};
    }
    if (form == 5) {  // column vs column of the same family
      std::vector<size_t> mates;
      for (size_t j = 0; j < sig.size(); ++j) {
        if (j != c && dtypes_comparable(dtype, sig[j].dtype)) mates.push_back(j);
      }
      if (!mates.empty()) {
        size_t j = pick(mates);
        return Predicate{Comparison{chance(0.7) ? CompareOp::Eq : CompareOp::Le, ref,
                                    ref_from_name(sig[j].name)}};
      }
      return Predicate{NullCheck{ref, true}};
    }
    if (form == 6) return Predicate{NullCheck{ref, chance(0.5)}};
    if (form == 7) {  // IN
      InList in;
      in.operand = ref;
      int n = pick_int(2, 3);
      for (int i = 0; i < n; ++i) in.items.push_back(Literal{sample_literal(dtype)});
      if (chance(0.15)) in.items.push_back(Literal{Value::null()});
      return Predicate{std::move(in)};
    }
    if (dtype_is_textual(dtype)) {
      return Predicate{Comparison{CompareOp::Like, ref, Literal{Value::text(like_pattern(dtype))}}};
    }
    return Predicate{Comparison{CompareOp::Ge, ref, Literal{sample_literal(dtype)}}};
  }

  Predicate predicate(const ColumnSignature& sig, int budget) {
    if (budget > 0 && chance(0.35)) {
      BoolCombo combo;
      combo.op = chance(0.5) ? BoolOp::And : BoolOp::Or;
      combo.children.push_back(predicate(sig, budget - 1));
      combo.children.push_back(predicate(sig, budget - 1));
      return Predicate{std::move(combo)};
    }
    if (budget > 0 && chance(0.12)) {
      BoolCombo combo;
      combo.op = BoolOp::Not;
      combo.children.push_back(predicate(sig, budget - 1));
      return Predicate{std::move(combo)};
    }
    return atom(sig);
  }

  struct Node {
    Plan plan;
    ColumnSignature sig;
  };

  Node finish(Plan plan) {
    Node node;
    node.sig = output_signature(plan, db.schema);  // throws on generator bugs
    node.plan = std::move(plan);
    return node;
  }

  std::vector<OutputExpr> subset_outputs(const ColumnSignature& sig, bool all,
                                         double alias_p) {
    std::vector<size_t> idx(sig.size());
    for (size_t i = 0; i < sig.size(); ++i) idx[i] = i;
    if (!all) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(static_cast<size_t>(pick_int(1, static_cast<int>(sig.size()))));
      std::sort(idx.begin(), idx.end());
    }
    std::vector<OutputExpr> outs;
    for (size_t i : idx) {
      OutputExpr e;
      e.expr = ref_from_name(sig[i].name);
      if (chance(alias_p)) e.alias = fresh_alias();
      outs.push_back(std::move(e));
    }
    return outs;
  }

  Node scan(bool alias_all) {
    const Table& table = db.schema.tables[static_cast<size_t>(
        pick_int(0, static_cast<int>(db.schema.tables.size()) - 1))];
    ScanArgs args;
    args.table = table.name;

    std::vector<size_t> idx(table.columns.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<size_t>(pick_int(1, static_cast<int>(table.columns.size()))));
    for (size_t i : idx) {
      OutputExpr e;
      e.expr = ColumnRef{std::nullopt, table.columns[i].name};
      if (alias_all || chance(0.05)) e.alias = fresh_alias();
      args.outputs.push_back(std::move(e));
    }
    if (chance(0.45)) {
      ColumnSignature table_sig;
      for (const Column& c : table.columns) {
        table_sig.push_back({table.name + "." + c.name, c.dtype});
      }
      args.predicate = predicate(table_sig, 1);
    }
    args.distinct = chance(0.15);

    Plan plan;
    plan.op = OpKind::Scan;
    plan.args = std::move(args);
    return finish(std::move(plan));
  }

  Node node(int depth) {
    if (depth == 0) return scan(false);
    // Operator weights; TopSort and the set ops need representation too.
    static const OpKind kOps[] = {OpKind::Filter,  OpKind::Filter,    OpKind::Aggregate,
                                  OpKind::Aggregate, OpKind::Join,    OpKind::Join,
                                  OpKind::Sort,    OpKind::TopSort,   OpKind::TopSort,
                                  OpKind::Union,   OpKind::Intersect, OpKind::Except};
    OpKind op = kOps[pick_int(0, 11)];
    switch (op) {
      case OpKind::Filter: return filter_node(depth);
      case OpKind::Aggregate: return aggregate_node(depth);
      case OpKind::Join: return join_node(depth);
      case OpKind::Sort: return sort_node(depth, false);
      case OpKind::TopSort: return sort_node(depth, true);
      default: return setop_node(depth, op);
    }
  }

  Node filter_node(int depth) {
    Node child = node(depth - 1);
    FilterArgs args;
    args.predicate = predicate(child.sig, 1);
    args.distinct = chance(0.1);
    args.outputs = subset_outputs(child.sig, false, 0.08);
    Plan plan;
    plan.op = OpKind::Filter;
    plan.children.push_back(std::move(child.plan));
    plan.args = std::move(args);
    return finish(std::move(plan));
  }

  Node aggregate_node(int depth) {
    Node child = node(depth - 1);
    AggregateArgs args;
    // In an Aggregate output, an aggregate-shaped token always reads as an
    // application, so columns named like "SUM(x)" cannot be passed through
    // by name; only alias-or-plain names are usable as group-by keys.
    std::vector<size_t> idx;
    for (size_t i = 0; i < child.sig.size(); ++i) {
      if (child.sig[i].name.find('(') == std::string::npos) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    size_t groups = idx.empty() ? 0
                                : static_cast<size_t>(pick_int(
                                      0, std::min(2, static_cast<int>(idx.size()))));
    for (size_t g = 0; g < groups; ++g) {
      ColumnRef ref = ref_from_name(child.sig[idx[g]].name);
      args.group_by.push_back(ref);
      OutputExpr e;
      e.expr = std::move(ref);
      args.outputs.push_back(std::move(e));
    }
    int naggs = pick_int(1, 2);
    for (int a = 0; a < naggs; ++a) {
      OutputExpr e;
      AggApply apply;
      if (chance(0.25)) {
        apply.func = AggFunc::Count;
        apply.countstar = true;
      } else {
        size_t c = static_cast<size_t>(pick_int(0, static_cast<int>(child.sig.size()) - 1));
        apply.operand = ref_from_name(child.sig[c].name);
        if (dtype_is_numeric(child.sig[c].dtype)) {
          static const AggFunc funcs[] = {AggFunc::Sum, AggFunc::Sum, AggFunc::Avg,
                                          AggFunc::Min, AggFunc::Max, AggFunc::Count};
          apply.func = funcs[pick_int(0, 5)];
        } else {
          static const AggFunc funcs[] = {AggFunc::Min, AggFunc::Max, AggFunc::Count};
          apply.func = funcs[pick_int(0, 2)];
        }
      }
      e.expr = std::move(apply);
      if (chance(0.5)) e.alias = fresh_alias();
      args.outputs.push_back(std::move(e));
    }
    Plan plan;
    plan.op = OpKind::Aggregate;
    plan.children.push_back(std::move(child.plan));
    plan.args = std::move(args);
    return finish(std::move(plan));
  }

  static bool signatures_collide(const ColumnSignature& a, const ColumnSignature& b) {
    std::set<std::string> names;
    for (const auto& c : a) names.insert(fold_case(c.name));
    for (const auto& c : b) {
      if (names.count(fold_case(c.name))) return true;
    }
    return false;
  }

  Node join_node(int depth) {
    Node left = node(depth - 1);
    Node right = node(pick_int(0, depth - 1));
    for (int attempt = 0; attempt < 3 && signatures_collide(left.sig, right.sig); ++attempt) {
      right = scan(false);
    }
    if (signatures_collide(left.sig, right.sig)) right = scan(true);
    if (chance(0.5)) std::swap(left, right);  // the deep side may sit either way

    JoinArgs args;
    std::vector<std::pair<size_t, size_t>> pairs;
    for (size_t i = 0; i < left.sig.size(); ++i) {
      for (size_t j = 0; j < right.sig.size(); ++j) {
        if (dtypes_comparable(left.sig[i].dtype, right.sig[j].dtype)) pairs.emplace_back(i, j);
      }
    }
    if (!pairs.empty()) {
      auto [i, j] = pick(pairs);
      args.predicate = Predicate{Comparison{CompareOp::Eq, ref_from_name(left.sig[i].name),
                                            ref_from_name(right.sig[j].name)}};
    } else {
      args.predicate = Predicate{NullCheck{ref_from_name(left.sig[0].name), true}};
    }
    ColumnSignature combined = left.sig;
    combined.insert(combined.end(), right.sig.begin(), right.sig.end());
    args.outputs = subset_outputs(combined, false, 0.05);

    Plan plan;
    plan.op = OpKind::Join;
    plan.children.push_back(std::move(left.plan));
    plan.children.push_back(std::move(right.plan));
    plan.args = std::move(args);
    return finish(std::move(plan));
  }

  Node sort_node(int depth, bool top) {
    Node child = node(depth - 1);
    std::vector<size_t> idx(child.sig.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::shuffle(idx.begin(), idx.end(), rng);

    std::vector<SortKey> keys;
    // TopSort keys cover every column so boundary ties can only fall
    // between identical rows; Sort takes a random non-empty subset.
    size_t nkeys = top ? idx.size()
                       : static_cast<size_t>(pick_int(1, std::min(3, static_cast<int>(idx.size()))));
    for (size_t k = 0; k < nkeys; ++k) {
      keys.push_back({ref_from_name(child.sig[idx[k]].name), chance(0.5)});
    }
    std::vector<OutputExpr> outputs = subset_outputs(child.sig, true, 0.0);

    Plan plan;
    if (top) {
      TopSortArgs args;
      args.rows = pick_int(1, 8);
      args.keys = std::move(keys);
      args.outputs = std::move(outputs);
      plan.op = OpKind::TopSort;
      plan.args = std::move(args);
    } else {
      SortArgs args;
      args.keys = std::move(keys);
      args.outputs = std::move(outputs);
      plan.op = OpKind::Sort;
      plan.args = std::move(args);
    }
    plan.children.push_back(std::move(child.plan));
    return finish(std::move(plan));
  }

  Node setop_node(int depth, OpKind op) {
    Node left = node(depth - 1);
    Node right = setop_mate(left);

    SetOpArgs args;
    for (const SignatureColumn& c : left.sig) {
      OutputExpr e;
      e.expr = ref_from_name(c.name);
      if (chance(0.08)) e.alias = fresh_alias();
      args.outputs.push_back(std::move(e));
    }
    Plan plan;
    plan.op = op;
    plan.children.push_back(std::move(left.plan));
    plan.children.push_back(std::move(right.plan));
    plan.args = std::move(args);
    return finish(std::move(plan));
  }

  // A second input whose columns match the left signature family-by-family
  // position-wise: either a compatible Scan or a structural copy.
  Node setop_mate(const Node& left) {
    if (!chance(0.2)) {
      std::vector<size_t> order(db.schema.tables.size());
      for (size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      for (size_t t : order) {
        const Table& table = db.schema.tables[t];
        std::vector<size_t> chosen;
        std::set<size_t> used;
        for (const SignatureColumn& want : left.sig) {
          bool found = false;
          for (size_t c = 0; c < table.columns.size(); ++c) {
            if (used.count(c)) continue;
            if (dtypes_comparable(want.dtype, table.columns[c].dtype)) {
              chosen.push_back(c);
              used.insert(c);
              found = true;
              break;
            }
          }
          if (!found) break;
        }
        if (chosen.size() != left.sig.size()) continue;
        ScanArgs args;
        args.table = table.name;
        for (size_t c : chosen) {
          OutputExpr e;
          e.expr = ColumnRef{std::nullopt, table.columns[c].name};
          args.outputs.push_back(std::move(e));
        }
        if (chance(0.5)) {
          ColumnSignature table_sig;
          for (const Column& col : table.columns) {
            table_sig.push_back({table.name + "." + col.name, col.dtype});
          }
          args.predicate = predicate(table_sig, 1);
        }
        Plan plan;
        plan.op = OpKind::Scan;
        plan.args = std::move(args);
        return finish(std::move(plan));
      }
    }
    Node copy;
    copy.plan = left.plan;
    copy.sig = left.sig;
    return copy;
  }
};

}  // namespace

GeneratedCase PlanGenerator::next() {
  return next_with_depth(std::uniform_int_distribution<int>(0, 4)(rng_));
}

GeneratedCase PlanGenerator::next_with_depth(int depth) {
  GeneratedCase out;
  out.schema = generate_schema();
  out.database = generate_database(out.schema);
  out.plan = generate_plan(out.database, depth);
  return out;
}

Schema PlanGenerator::generate_schema() {
  auto pick_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  };
  Schema schema;
  schema.db_id = "generated";
  int ntables = pick_int(1, 3);
  for (int t = 0; t < ntables; ++t) {
    Table table;
    table.name = "t" + std::to_string(t + 1);
    table.columns.push_back({"id", Dtype::Integer});
    if (t > 0 && pick_int(0, 9) < 8) {
      table.columns.push_back({"t1_id", Dtype::Integer});
      table.foreign_keys.push_back({"t1_id", "t1", "id"});
    }
    std::vector<std::string> names(std::begin(kColumnPool), std::end(kColumnPool));
    std::shuffle(names.begin(), names.end(), rng_);
    int extra = pick_int(1, 4 - static_cast<int>(table.columns.size()) + 1);
    static const Dtype kDtypes[] = {Dtype::Integer, Dtype::Real, Dtype::Text, Dtype::Boolean,
                                    Dtype::Date};
    for (int c = 0; c < extra; ++c) {
      table.columns.push_back({names[static_cast<size_t>(c)], kDtypes[pick_int(0, 4)]});
    }
    table.primary_key.push_back("id");
    schema.tables.push_back(std::move(table));
  }
  return schema;
}

Database PlanGenerator::generate_database(const Schema& schema, size_t max_rows) {
  auto pick_int = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng_);
  };
  auto chance = [&](double p) {
    return std::uniform_real_distribution<double>(0, 1)(rng_) < p;
  };
  std::map<std::string, TableData> contents;
  size_t t1_rows = 0;
  for (const Table& table : schema.tables) {
    TableData data;
    size_t nrows = static_cast<size_t>(pick_int(0, static_cast<int>(max_rows)));
    if (chance(0.07)) nrows = 0;  // keep the empty-relation path exercised
    for (size_t r = 0; r < nrows; ++r) {
      std::vector<Value> row;
      for (const Column& col : table.columns) {
        if (col.name == "id") {
          row.push_back(Value::integer(static_cast<int64_t>(r + 1)));
          continue;
        }
        if (col.name == "t1_id") {
          if (chance(0.1) || t1_rows == 0) {
            row.push_back(chance(0.5) ? Value::null()
                                      : Value::integer(pick_int(1, 99)));  // dangling on purpose
          } else {
            row.push_back(Value::integer(pick_int(1, static_cast<int>(t1_rows))));
          }
          continue;
        }
        if (chance(0.1)) {
          row.push_back(Value::null());
          continue;
        }
        switch (col.dtype) {
          case Dtype::Integer: row.push_back(Value::integer(pick_int(-5, 20))); break;
          case Dtype::Real: row.push_back(Value::real(pick_int(-40, 80) / 4.0)); break;
          case Dtype::Boolean: row.push_back(Value::boolean(chance(0.5))); break;
          case Dtype::Text: row.push_back(Value::text(kTextPool[pick_int(0, 7)])); break;
          case Dtype::Date: row.push_back(Value::text(kDatePool[pick_int(0, 4)])); break;
        }
      }
      data.rows.push_back(std::move(row));
    }
    if (table.name == "t1") t1_rows = data.rows.size();
    contents.emplace(table.name, std::move(data));
  }
  return make_database(schema, std::move(contents));
}

Plan PlanGenerator::generate_plan(const Database& db, int depth) {
  Gen gen(rng_, alias_counter_, db);
  for (int attempt = 0; attempt < 20; ++attempt) {
    try {
      return gen.node(depth).plan;
    } catch (const ValidationError&) {
      // Extremely rare corner (e.g. exotic collision); retry with new dice.
      continue;
    }
  }
  throw std::logic_error("plan generator failed to produce a valid plan");
}

}  // namespace qpl
