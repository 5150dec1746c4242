#include "qpl/interpreter.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "qpl/csv.hpp"

namespace qpl {

bool like_match(const std::string& text, const std::string& pattern) {
  size_t t = 0, p = 0;
  size_t star_p = std::string::npos, star_t = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '_' || pattern[p] == text[t])) {
      ++t;
      ++p;
    } else if (p < pattern.size() && pattern[p] == '%') {
      star_p = p++;
      star_t = t;
    } else if (star_p != std::string::npos) {
      p = star_p + 1;
      t = ++star_t;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '%') ++p;
  return p == pattern.size();
}

bool row_less(const std::vector<Value>& a, const std::vector<Value>& b) {
  size_t n = std::min(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    int c = order_values(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

namespace {

using Row = std::vector<Value>;

struct RowOrder {
  bool operator()(const Row& a, const Row& b) const { return row_less(a, b); }
};

std::vector<Row> distinct_rows(const std::vector<Row>& rows) {
  std::set<Row, RowOrder> seen;
  std::vector<Row> out;
  for (const Row& row : rows) {
    if (seen.insert(row).second) out.push_back(row);
  }
  return out;
}

enum class Truth { True, False, Unknown };

Truth truth_not(Truth t) {
  if (t == Truth::Unknown) return Truth::Unknown;
  return t == Truth::True ? Truth::False : Truth::True;
}

class Executor {
 public:
  Executor(const Plan& plan, const Database& db) : db_(db) {
    report_ = validate(plan, db.schema);
    if (!report_.ok) {
      std::string msg = "plan failed validation";
      if (!report_.diagnostics.empty()) msg += ": " + report_.diagnostics.front().message;
      throw InterpretError(msg);
    }
    auto subs = sub_plans(plan);
    for (size_t i = 0; i < subs.size(); ++i) node_step_[subs[i]] = i;
  }

  Relation eval(const Plan& node, std::vector<StepResult>* steps) {
    std::vector<Relation> inputs;
    inputs.reserve(node.children.size());
    for (const Plan& child : node.children) inputs.push_back(eval(child, steps));

    Relation out;
    out.signature = report_.step_signatures[node_step_.at(&node)];
    out.ordered = node.op == OpKind::Sort || node.op == OpKind::TopSort;

    switch (node.op) {
      case OpKind::Scan: {
        const auto& args = std::get<ScanArgs>(node.args);
        const Table* table = db_.schema.find_table(args.table);
        ColumnSignature table_sig;
        for (const Column& c : table->columns) {
          table_sig.push_back({table->name + "." + c.name, c.dtype});
        }
        const TableData& data = db_.table_data(args.table);
        std::vector<size_t> projection;
        for (const OutputExpr& o : args.outputs) {
          const auto& ref = std::get<ColumnRef>(o.expr);
          // Bare names resolve against the scanned table.
          std::string full = ref.table ? ref.full_name() : table->name + "." + ref.column;
          projection.push_back(*find_in_signature(table_sig, full));
        }
        for (const Row& row : data.rows) {
          if (args.predicate &&
              eval_predicate(*args.predicate, row, table_sig) != Truth::True) {
            continue;
          }
          Row projected;
          projected.reserve(projection.size());
          for (size_t idx : projection) projected.push_back(row[idx]);
          out.rows.push_back(std::move(projected));
        }
        if (args.distinct) out.rows = distinct_rows(out.rows);
        break;
      }
      case OpKind::Filter: {
        const auto& args = std::get<FilterArgs>(node.args);
        const Relation& in = inputs[0];
        auto projection = resolve_outputs(args.outputs, in.signature);
        for (const Row& row : in.rows) {
          if (eval_predicate(args.predicate, row, in.signature) != Truth::True) continue;
          out.rows.push_back(project(row, projection));
        }
        if (args.distinct) out.rows = distinct_rows(out.rows);
        break;
      }
      case OpKind::Join: {
        const auto& args = std::get<JoinArgs>(node.args);
        ColumnSignature combined = inputs[0].signature;
        combined.insert(combined.end(), inputs[1].signature.begin(),
                        inputs[1].signature.end());
        auto projection = resolve_outputs(args.outputs, combined);
        for (const Row& left : inputs[0].rows) {
          for (const Row& right : inputs[1].rows) {
            Row joined = left;
            joined.insert(joined.end(), right.begin(), right.end());
            if (eval_predicate(args.predicate, joined, combined) != Truth::True) continue;
            out.rows.push_back(project(joined, projection));
          }
        }
        break;
      }
      case OpKind::Aggregate: {
        const auto& args = std::get<AggregateArgs>(node.args);
        const Relation& in = inputs[0];
        std::vector<size_t> group_idx;
        for (const ColumnRef& g : args.group_by) {
          group_idx.push_back(*find_in_signature(in.signature, g.full_name()));
        }
        // Sorted grouping keeps the output deterministic.
        std::map<Row, std::vector<const Row*>, RowOrder> groups;
        for (const Row& row : in.rows) {
          Row key;
          key.reserve(group_idx.size());
          for (size_t gi : group_idx) key.push_back(row[gi]);
          groups[std::move(key)].push_back(&row);
        }
        if (args.group_by.empty()) {
          // Scalar aggregation: exactly one (possibly empty) group.
          if (groups.empty()) groups[{}] = {};
          for (const auto& [key, rows] : groups) {
            out.rows.push_back(aggregate_row(args, in.signature, rows));
          }
        } else {
          for (const auto& [key, rows] : groups) {
            out.rows.push_back(aggregate_row(args, in.signature, rows));
          }
        }
        break;
      }
      case OpKind::Except:
      case OpKind::Intersect:
      case OpKind::Union: {
        std::vector<Row> left = normalize_rows(inputs[0].rows, inputs[0].signature, out.signature);
        std::vector<Row> right = normalize_rows(inputs[1].rows, inputs[1].signature, out.signature);
        if (node.op == OpKind::Union) {
          left.insert(left.end(), right.begin(), right.end());
          out.rows = distinct_rows(left);
        } else {
          std::set<Row, RowOrder> right_set(right.begin(), right.end());
          bool keep_present = node.op == OpKind::Intersect;
          for (const Row& row : distinct_rows(left)) {
            if ((right_set.count(row) > 0) == keep_present) out.rows.push_back(row);
          }
        }
        break;
      }
      case OpKind::Sort:
      case OpKind::TopSort: {
        const Relation& in = inputs[0];
        const std::vector<SortKey>* keys;
        const std::vector<OutputExpr>* outputs;
        int64_t limit = -1;
        if (node.op == OpKind::Sort) {
          const auto& args = std::get<SortArgs>(node.args);
          keys = &args.keys;
          outputs = &args.outputs;
        } else {
          const auto& args = std::get<TopSortArgs>(node.args);
          keys = &args.keys;
          outputs = &args.outputs;
          limit = args.rows;
        }
        std::vector<std::pair<size_t, bool>> key_idx;
        for (const SortKey& k : *keys) {
          key_idx.emplace_back(*find_in_signature(in.signature, k.ref.full_name()),
                               k.descending);
        }
        std::vector<Row> rows = in.rows;
        std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
          for (const auto& [idx, desc] : key_idx) {
            int c = order_values(a[idx], b[idx]);  // nulls first ascending
            if (c != 0) return desc ? c > 0 : c < 0;
          }
          return false;
        });
        if (limit >= 0 && static_cast<int64_t>(rows.size()) > limit) {
          rows.resize(static_cast<size_t>(limit));
        }
        auto projection = resolve_outputs(*outputs, in.signature);
        for (const Row& row : rows) out.rows.push_back(project(row, projection));
        break;
      }
    }

    if (steps) steps->push_back({steps->size() + 1, out});
    return out;
  }

 private:
  const Database& db_;
  ValidationReport report_;
  std::map<const Plan*, size_t> node_step_;

  static std::vector<size_t> resolve_outputs(const std::vector<OutputExpr>& outputs,
                                             const ColumnSignature& sig) {
    std::vector<size_t> idx;
    idx.reserve(outputs.size());
    for (const OutputExpr& o : outputs) {
      idx.push_back(*find_in_signature(sig, std::get<ColumnRef>(o.expr).full_name()));
    }
    return idx;
  }

  static Row project(const Row& row, const std::vector<size_t>& projection) {
    Row out;
    out.reserve(projection.size());
    for (size_t idx : projection) out.push_back(row[idx]);
    return out;
  }

  // Converts cells to the set operation's unified column dtypes so that
  // 1 and 1.0 collapse the way SQL set semantics collapse them.
  static std::vector<Row> normalize_rows(const std::vector<Row>& rows,
                                         const ColumnSignature& from,
                                         const ColumnSignature& to) {
    std::vector<Row> out;
    out.reserve(rows.size());
    for (const Row& row : rows) {
      Row converted = row;
      for (size_t i = 0; i < converted.size(); ++i) {
        if (from[i].dtype == to[i].dtype || converted[i].is_null()) continue;
        if (to[i].dtype == Dtype::Real) {
          converted[i] = Value::real(converted[i].numeric());
        } else if (to[i].dtype == Dtype::Integer && converted[i].is_boolean()) {
          converted[i] = Value::integer(converted[i].as_boolean() ? 1 : 0);
        }
        // textual unification (date -> text) keeps the payload as is
      }
      out.push_back(std::move(converted));
    }
    return out;
  }

  Value operand_value(const Operand& op, const Row& row, const ColumnSignature& sig) const {
    if (const auto* ref = std::get_if<ColumnRef>(&op)) {
      return row[*find_in_signature(sig, ref->full_name())];
    }
    return std::get<Literal>(op).value;
  }

  Truth eval_predicate(const Predicate& pred, const Row& row,
                       const ColumnSignature& sig) const {
    if (const auto* cmp = std::get_if<Comparison>(&pred.node)) {
      Value lhs = operand_value(cmp->lhs, row, sig);
      Value rhs = operand_value(cmp->rhs, row, sig);
      if (cmp->op == CompareOp::Like) {
        if (lhs.is_null() || rhs.is_null()) return Truth::Unknown;
        return like_match(lhs.as_text(), rhs.as_text()) ? Truth::True : Truth::False;
      }
      auto c = compare_values(lhs, rhs);
      if (!c) return Truth::Unknown;
      bool result = false;
      switch (cmp->op) {
        case CompareOp::Eq: result = *c == 0; break;
        case CompareOp::Ne: result = *c != 0; break;
        case CompareOp::Lt: result = *c < 0; break;
        case CompareOp::Le: result = *c <= 0; break;
        case CompareOp::Gt: result = *c > 0; break;
        case CompareOp::Ge: result = *c >= 0; break;
        case CompareOp::Like: break;
      }
      return result ? Truth::True : Truth::False;
    }
    if (const auto* nc = std::get_if<NullCheck>(&pred.node)) {
      bool is_null = operand_value(nc->operand, row, sig).is_null();
      return (is_null != nc->negated) ? Truth::True : Truth::False;
    }
    if (const auto* in = std::get_if<InList>(&pred.node)) {
      Value lhs = operand_value(in->operand, row, sig);
      if (lhs.is_null()) return Truth::Unknown;
      bool saw_null = false;
      for (const Literal& item : in->items) {
        if (item.value.is_null()) {
          saw_null = true;
          continue;
        }
        auto c = compare_values(lhs, item.value);
        if (c && *c == 0) return Truth::True;
      }
      return saw_null ? Truth::Unknown : Truth::False;
    }
    const auto& combo = std::get<BoolCombo>(pred.node);
    if (combo.op == BoolOp::Not) {
      return truth_not(eval_predicate(combo.children[0], row, sig));
    }
    bool any_unknown = false;
    for (const Predicate& child : combo.children) {
      Truth t = eval_predicate(child, row, sig);
      if (combo.op == BoolOp::And && t == Truth::False) return Truth::False;
      if (combo.op == BoolOp::Or && t == Truth::True) return Truth::True;
      if (t == Truth::Unknown) any_unknown = true;
    }
    if (any_unknown) return Truth::Unknown;
    return combo.op == BoolOp::And ? Truth::True : Truth::False;
  }

  Row aggregate_row(const AggregateArgs& args, const ColumnSignature& in_sig,
                    const std::vector<const Row*>& rows) const {
    Row out;
    out.reserve(args.outputs.size());
    for (const OutputExpr& o : args.outputs) {
      if (const auto* ref = std::get_if<ColumnRef>(&o.expr)) {
        size_t idx = *find_in_signature(in_sig, ref->full_name());
        // Group-by column: every row in the group shares the value.
        out.push_back(rows.empty() ? Value::null() : (*rows[0])[idx]);
        continue;
      }
      const auto& agg = std::get<AggApply>(o.expr);
      if (agg.countstar) {
        out.push_back(Value::integer(static_cast<int64_t>(rows.size())));
        continue;
      }
      size_t idx = *find_in_signature(in_sig, agg.operand.full_name());
      std::vector<const Value*> values;
      for (const Row* row : rows) {
        if (!(*row)[idx].is_null()) values.push_back(&(*row)[idx]);
      }
      switch (agg.func) {
        case AggFunc::Count:
          out.push_back(Value::integer(static_cast<int64_t>(values.size())));
          break;
        case AggFunc::Sum:
        case AggFunc::Avg: {
          if (values.empty()) {
            out.push_back(Value::null());
            break;
          }
          double sum = 0;
          for (const Value* v : values) sum += v->numeric();
          out.push_back(Value::real(agg.func == AggFunc::Sum
                                        ? sum
                                        : sum / static_cast<double>(values.size())));
          break;
        }
        case AggFunc::Min:
        case AggFunc::Max: {
          if (values.empty()) {
            out.push_back(Value::null());
            break;
          }
          const Value* best = values[0];
          for (const Value* v : values) {
            int c = *compare_values(*v, *best);
            if (agg.func == AggFunc::Min ? c < 0 : c > 0) best = v;
          }
          out.push_back(*best);
          break;
        }
      }
    }
    return out;
  }
};

}  // namespace

Relation interpret(const Plan& plan, const Database& db) {
  Executor ex(plan, db);
  return ex.eval(plan, nullptr);
}

std::vector<StepResult> interpret_all_steps(const Plan& plan, const Database& db) {
  Executor ex(plan, db);
  std::vector<StepResult> steps;
  ex.eval(plan, &steps);
  return steps;
}

std::string relation_to_csv(const Relation& relation) {
  std::string out;
  std::vector<std::string> header;
  header.reserve(relation.signature.size());
  for (const SignatureColumn& c : relation.signature) header.push_back(c.name);
  out += csv::write_record(header);
  for (const auto& row : relation.rows) {
    std::vector<std::string> fields;
    fields.reserve(row.size());
    for (const Value& v : row) fields.push_back(value_to_display(v));
    out += csv::write_record(fields);
  }
  return out;
}

std::string relation_to_json(const Relation& relation) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : relation.rows) {
    nlohmann::json jrow = nlohmann::json::array();
    for (const Value& v : row) {
      if (v.is_null()) jrow.push_back(nullptr);
      else if (v.is_integer()) jrow.push_back(v.as_integer());
      else if (v.is_real()) jrow.push_back(v.as_real());
      else if (v.is_boolean()) jrow.push_back(v.as_boolean());
      else jrow.push_back(v.as_text());
    }
    rows.push_back(std::move(jrow));
  }
  return rows.dump();
}

}  // namespace qpl
