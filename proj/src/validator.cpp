#include "qpl/validator.hpp"

#include <set>

namespace qpl {

std::optional<size_t> find_in_signature(const ColumnSignature& sig, const std::string& name) {
  for (size_t i = 0; i < sig.size(); ++i) {
    if (iequals(sig[i].name, name)) return i;
  }
  return std::nullopt;
}

namespace {

struct Checker {
  const Schema& schema;
  std::vector<Diagnostic>& diags;
  std::vector<ColumnSignature>& sigs;

  void error(size_t step, OpKind op, const std::string& msg) {
    Diagnostic d;
    d.severity = Severity::Error;
    d.message = "step " + std::to_string(step) + " (" + op_name(op) + "): " + msg;
    diags.push_back(std::move(d));
  }

  static ColumnSignature table_signature(const Table& table) {
    ColumnSignature sig;
    sig.reserve(table.columns.size());
    for (const Column& c : table.columns) {
      sig.push_back({table.name + "." + c.name, c.dtype});
    }
    return sig;
  }

  // Literal dtype; nullopt stands for the null literal, comparable with
  // anything.
  static std::optional<Dtype> literal_dtype(const Value& v) {
    if (v.is_null()) return std::nullopt;
    if (v.is_integer()) return Dtype::Integer;
    if (v.is_real()) return Dtype::Real;
    if (v.is_boolean()) return Dtype::Boolean;
    return Dtype::Text;
  }

  std::optional<Dtype> operand_dtype(const Operand& op, const ColumnSignature& sig,
                                     size_t step, OpKind kind, bool& failed) {
    if (const auto* ref = std::get_if<ColumnRef>(&op)) {
      auto idx = find_in_signature(sig, ref->full_name());
      if (!idx) {
        error(step, kind, "cannot resolve column '" + ref->full_name() + "'");
        failed = true;
        return std::nullopt;
      }
      return sig[*idx].dtype;
    }
    return literal_dtype(std::get<Literal>(op).value);
  }

  void check_comparable(std::optional<Dtype> a, std::optional<Dtype> b, const char* what,
                        size_t step, OpKind kind, bool& failed) {
    if (!a || !b) return;  // null literal compares with anything
    if (!dtypes_comparable(*a, *b)) {
      error(step, kind, std::string(what) + " compares " + dtype_name(*a) + " with " +
                            dtype_name(*b));
      failed = true;
    }
  }

  bool check_predicate(const Predicate& pred, const ColumnSignature& sig, size_t step,
                       OpKind kind) {
    bool failed = false;
    check_predicate_rec(pred, sig, step, kind, failed);
    return !failed;
  }

  void check_predicate_rec(const Predicate& pred, const ColumnSignature& sig, size_t step,
                           OpKind kind, bool& failed) {
    if (const auto* cmp = std::get_if<Comparison>(&pred.node)) {
      auto lt = operand_dtype(cmp->lhs, sig, step, kind, failed);
      auto rt = operand_dtype(cmp->rhs, sig, step, kind, failed);
      if (cmp->op == CompareOp::Like) {
        if (lt && !dtype_is_textual(*lt)) {
          error(step, kind, "LIKE requires text operands");
          failed = true;
        }
        if (rt && !dtype_is_textual(*rt)) {
          error(step, kind, "LIKE requires a text pattern");
          failed = true;
        }
      } else {
        check_comparable(lt, rt, "predicate", step, kind, failed);
      }
      return;
    }
    if (const auto* nc = std::get_if<NullCheck>(&pred.node)) {
      operand_dtype(nc->operand, sig, step, kind, failed);
      return;
    }
    if (const auto* in = std::get_if<InList>(&pred.node)) {
      auto t = operand_dtype(in->operand, sig, step, kind, failed);
      for (const Literal& item : in->items) {
        check_comparable(t, literal_dtype(item.value), "IN list", step, kind, failed);
      }
      return;
    }
    for (const Predicate& child : std::get<BoolCombo>(pred.node).children) {
      check_predicate_rec(child, sig, step, kind, failed);
    }
  }

  // Appends the resolved signature entry for one output expression, or
  // reports and returns false.
  bool resolve_output(const OutputExpr& out, const ColumnSignature& base, size_t step,
                      OpKind kind, bool is_aggregate, const std::vector<size_t>& group_indices,
                      ColumnSignature& result) {
    if (const auto* ref = std::get_if<ColumnRef>(&out.expr)) {
      auto idx = find_in_signature(base, ref->full_name());
      if (!idx) {
        error(step, kind, "cannot resolve column '" + ref->full_name() + "'");
        return false;
      }
      if (is_aggregate) {
        bool grouped = false;
        for (size_t g : group_indices) grouped = grouped || g == *idx;
        if (!grouped) {
          error(step, kind, "non-aggregate output '" + ref->full_name() +
                                "' must appear in GroupBy");
          return false;
        }
      }
      result.push_back({out.alias ? *out.alias : base[*idx].name, base[*idx].dtype});
      return true;
    }
    const auto& agg = std::get<AggApply>(out.expr);
    if (!is_aggregate) {
      error(step, kind, "aggregate expressions are only allowed in Aggregate outputs");
      return false;
    }
    if (agg.countstar) {
      result.push_back({out.alias ? *out.alias : "COUNT(*)", Dtype::Integer});
      return true;
    }
    auto idx = find_in_signature(base, agg.operand.full_name());
    if (!idx) {
      error(step, kind, "cannot resolve column '" + agg.operand.full_name() + "'");
      return false;
    }
    Dtype in_type = base[*idx].dtype;
    Dtype out_type = in_type;
    switch (agg.func) {
      case AggFunc::Sum:
      case AggFunc::Avg:
        if (!dtype_is_numeric(in_type)) {
          error(step, kind, std::string(agg_func_name(agg.func)) + " over non-numeric column '" +
                                base[*idx].name + "'");
          return false;
        }
        out_type = Dtype::Real;
        break;
      case AggFunc::Count:
        out_type = Dtype::Integer;
        break;
      case AggFunc::Min:
      case AggFunc::Max:
        break;  // preserve the input dtype
    }
    std::string name = out.alias
                           ? *out.alias
                           : std::string(agg_func_name(agg.func)) + "(" + base[*idx].name + ")";
    result.push_back({std::move(name), out_type});
    return true;
  }

  bool check_unique_names(const ColumnSignature& sig, size_t step, OpKind kind,
                          const char* what) {
    std::set<std::string> seen;
    bool ok = true;
    for (const SignatureColumn& c : sig) {
      if (!seen.insert(fold_case(c.name)).second) {
        error(step, kind, std::string("duplicate column name '") + c.name + "' " + what);
        ok = false;
      }
    }
    return ok;
  }

  static std::optional<Dtype> unify_dtypes(Dtype a, Dtype b) {
    if (a == b) return a;
    if (dtype_is_numeric(a) && dtype_is_numeric(b)) {
      if (a == Dtype::Real || b == Dtype::Real) return Dtype::Real;
      return Dtype::Integer;  // Integer absorbs Boolean
    }
    if (dtype_is_textual(a) && dtype_is_textual(b)) return Dtype::Text;
    return std::nullopt;
  }

  // Post-order walk; pushes one signature per node (empty on failure).
  std::optional<ColumnSignature> synth(const Plan& node) {
    std::vector<std::optional<ColumnSignature>> child_sigs;
    child_sigs.reserve(node.children.size());
    for (const Plan& child : node.children) child_sigs.push_back(synth(child));

    size_t step = sigs.size() + 1;
    auto finish = [&](std::optional<ColumnSignature> sig) -> std::optional<ColumnSignature> {
      sigs.push_back(sig ? *sig : ColumnSignature{});
      return sig;
    };

    for (const auto& cs : child_sigs) {
      if (!cs) return finish(std::nullopt);  // child already reported
    }

    switch (node.op) {
      case OpKind::Scan: {
        const auto& args = std::get<ScanArgs>(node.args);
        const Table* table = schema.find_table(args.table);
        if (!table) {
          error(step, node.op, "unknown table '" + args.table + "'");
          return finish(std::nullopt);
        }
        ColumnSignature table_sig = table_signature(*table);
        bool ok = true;
        if (args.predicate) ok = check_predicate(*args.predicate, table_sig, step, node.op) && ok;
        ColumnSignature result;
        for (const OutputExpr& out : args.outputs) {
          const auto* ref = std::get_if<ColumnRef>(&out.expr);
          if (!ref) {
            error(step, node.op, "aggregate expressions are only allowed in Aggregate outputs");
            ok = false;
            continue;
          }
          if (ref->table && !iequals(*ref->table, table->name)) {
            error(step, node.op, "column '" + ref->full_name() + "' is not from scanned table '" +
                                     table->name + "'");
            ok = false;
            continue;
          }
          const Column* col = table->find_column(ref->column);
          if (!col) {
            error(step, node.op, "unknown column '" + ref->column + "' in table '" +
                                     table->name + "'");
            ok = false;
            continue;
          }
          result.push_back(
              {out.alias ? *out.alias : table->name + "." + col->name, col->dtype});
        }
        if (!ok) return finish(std::nullopt);
        if (!check_unique_names(result, step, node.op, "in Scan output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
      case OpKind::Filter: {
        const auto& args = std::get<FilterArgs>(node.args);
        const ColumnSignature& base = *child_sigs[0];
        bool ok = check_predicate(args.predicate, base, step, node.op);
        ColumnSignature result;
        for (const OutputExpr& out : args.outputs) {
          ok = resolve_output(out, base, step, node.op, false, {}, result) && ok;
        }
        if (!ok || !check_unique_names(result, step, node.op, "in output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
      case OpKind::Join: {
        const auto& args = std::get<JoinArgs>(node.args);
        ColumnSignature combined = *child_sigs[0];
        combined.insert(combined.end(), child_sigs[1]->begin(), child_sigs[1]->end());
        if (!check_unique_names(combined, step, node.op,
                                "is visible from both inputs; alias one side")) {
          return finish(std::nullopt);
        }
        bool ok = check_predicate(args.predicate, combined, step, node.op);
        ColumnSignature result;
        for (const OutputExpr& out : args.outputs) {
          ok = resolve_output(out, combined, step, node.op, false, {}, result) && ok;
        }
        if (!ok || !check_unique_names(result, step, node.op, "in output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
      case OpKind::Aggregate: {
        const auto& args = std::get<AggregateArgs>(node.args);
        const ColumnSignature& base = *child_sigs[0];
        bool ok = true;
        std::vector<size_t> group_indices;
        for (const ColumnRef& g : args.group_by) {
          auto idx = find_in_signature(base, g.full_name());
          if (!idx) {
            error(step, node.op, "cannot resolve group-by column '" + g.full_name() + "'");
            ok = false;
            continue;
          }
          group_indices.push_back(*idx);
        }
        ColumnSignature result;
        for (const OutputExpr& out : args.outputs) {
          ok = resolve_output(out, base, step, node.op, true, group_indices, result) && ok;
        }
        if (!ok || !check_unique_names(result, step, node.op, "in output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
      case OpKind::Except:
      case OpKind::Intersect:
      case OpKind::Union: {
        const auto& args = std::get<SetOpArgs>(node.args);
        const ColumnSignature& left = *child_sigs[0];
        const ColumnSignature& right = *child_sigs[1];
        if (left.size() != right.size()) {
          error(step, node.op, "inputs have different arity (" + std::to_string(left.size()) +
                                   " vs " + std::to_string(right.size()) + ")");
          return finish(std::nullopt);
        }
        std::vector<Dtype> unified(left.size());
        bool ok = true;
        for (size_t i = 0; i < left.size(); ++i) {
          auto u = unify_dtypes(left[i].dtype, right[i].dtype);
          if (!u) {
            error(step, node.op, "column " + std::to_string(i + 1) + " mixes " +
                                     dtype_name(left[i].dtype) + " with " +
                                     dtype_name(right[i].dtype));
            ok = false;
            continue;
          }
          unified[i] = *u;
        }
        if (args.outputs.size() != left.size()) {
          error(step, node.op, "output list must cover the left input's " +
                                   std::to_string(left.size()) + " columns");
          return finish(std::nullopt);
        }
        ColumnSignature result;
        for (size_t i = 0; i < args.outputs.size(); ++i) {
          const auto* ref = std::get_if<ColumnRef>(&args.outputs[i].expr);
          if (!ref) {
            error(step, node.op, "aggregate expressions are only allowed in Aggregate outputs");
            ok = false;
            continue;
          }
          auto idx = find_in_signature(left, ref->full_name());
          if (!idx) {
            error(step, node.op, "cannot resolve column '" + ref->full_name() +
                                     "' in the left input");
            ok = false;
            continue;
          }
          if (*idx != i) {
            error(step, node.op, "output " + std::to_string(i + 1) +
                                     " must name the left input's column at the same position");
            ok = false;
            continue;
          }
          result.push_back(
              {args.outputs[i].alias ? *args.outputs[i].alias : left[i].name, unified[i]});
        }
        if (!ok || !check_unique_names(result, step, node.op, "in output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
      case OpKind::Sort:
      case OpKind::TopSort: {
        const std::vector<SortKey>* keys;
        const std::vector<OutputExpr>* outputs;
        if (node.op == OpKind::Sort) {
          const auto& args = std::get<SortArgs>(node.args);
          keys = &args.keys;
          outputs = &args.outputs;
        } else {
          const auto& args = std::get<TopSortArgs>(node.args);
          keys = &args.keys;
          outputs = &args.outputs;
        }
        const ColumnSignature& base = *child_sigs[0];
        bool ok = true;
        for (const SortKey& key : *keys) {
          if (!find_in_signature(base, key.ref.full_name())) {
            error(step, node.op, "cannot resolve order-by column '" + key.ref.full_name() + "'");
            ok = false;
          }
        }
        ColumnSignature result;
        for (const OutputExpr& out : *outputs) {
          ok = resolve_output(out, base, step, node.op, false, {}, result) && ok;
        }
        if (!ok || !check_unique_names(result, step, node.op, "in output")) {
          return finish(std::nullopt);
        }
        return finish(std::move(result));
      }
    }
    return finish(std::nullopt);
  }
};

}  // namespace

ValidationReport validate(const Plan& plan, const Schema& schema) {
  ValidationReport report;
  for (const std::string& err : structural_errors(plan)) {
    Diagnostic d;
    d.severity = Severity::Error;
    d.message = "structure: " + err;
    report.diagnostics.push_back(std::move(d));
  }
  if (!report.diagnostics.empty()) {
    report.ok = false;
    return report;
  }
  Checker checker{schema, report.diagnostics, report.step_signatures};
  checker.synth(plan);
  report.ok = true;
  for (const Diagnostic& d : report.diagnostics) {
    if (d.severity == Severity::Error) report.ok = false;
  }
  return report;
}

ColumnSignature output_signature(const Plan& plan, const Schema& schema) {
  ValidationReport report = validate(plan, schema);
  if (!report.ok) {
    std::string msg = "invalid plan";
    if (!report.diagnostics.empty()) msg += ": " + report.diagnostics.front().message;
    throw ValidationError(msg);
  }
  return report.step_signatures.back();
}

std::vector<size_t> ordered_key_positions(const Plan& root, const ColumnSignature& child_sig) {
  std::vector<size_t> positions;
  const std::vector<SortKey>* keys = nullptr;
  const std::vector<OutputExpr>* outputs = nullptr;
  if (root.op == OpKind::Sort) {
    keys = &std::get<SortArgs>(root.args).keys;
    outputs = &std::get<SortArgs>(root.args).outputs;
  } else if (root.op == OpKind::TopSort) {
    keys = &std::get<TopSortArgs>(root.args).keys;
    outputs = &std::get<TopSortArgs>(root.args).outputs;
  } else {
    return positions;
  }
  for (const SortKey& key : *keys) {
    auto key_idx = find_in_signature(child_sig, key.ref.full_name());
    if (!key_idx) break;
    std::optional<size_t> found;
    for (size_t j = 0; j < outputs->size(); ++j) {
      const auto* ref = std::get_if<ColumnRef>(&(*outputs)[j].expr);
      if (!ref) continue;
      auto out_idx = find_in_signature(child_sig, ref->full_name());
      if (out_idx && *out_idx == *key_idx) {
        found = j;
        break;
      }
    }
    if (!found) break;  // only a prefix of the keys is usable
    positions.push_back(*found);
  }
  return positions;
}

}  // namespace qpl
