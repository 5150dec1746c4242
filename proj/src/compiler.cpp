#include "qpl/compiler.hpp"

#include <cctype>
#include <set>

#include "qpl/validator.hpp"

namespace qpl {

std::string sql_quote(const std::string& name) {
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string sql_literal(const Value& v) {
  if (v.is_null()) return "NULL";
  if (v.is_integer()) return std::to_string(v.as_integer());
  if (v.is_real()) return format_real(v.as_real());
  if (v.is_boolean()) return v.as_boolean() ? "1" : "0";
  std::string out = "'";
  for (char c : v.as_text()) {
    if (c == '\'') out += "''";
    else out.push_back(c);
  }
  out += "'";
  return out;
}

namespace {

std::string sanitize(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') out.push_back(c);
    else out.push_back('_');
  }
  if (out.empty()) out = "col";
  if (std::isdigit(static_cast<unsigned char>(out[0]))) out.insert(out.begin(), 'c');
  return out;
}

// A named tuple source visible to the clause being compiled: the base table
// for a Scan, otherwise previously compiled steps.
struct Source {
  std::string prefix;  // quoted table name or unquoted Step_<i>
  const ColumnSignature* sig = nullptr;
  std::vector<std::string> columns;  // raw SQL column names, parallel to sig
};

struct StepInfo {
  std::string name;
  std::vector<std::string> out_cols;
  const ColumnSignature* sig = nullptr;
};

class Compiler {
 public:
  Compiler(const Schema& schema, SqlDialect dialect, const ValidationReport& report)
      : schema_(schema), dialect_(dialect), report_(report) {}

  StepInfo compile_node(const Plan& node) {
    std::vector<StepInfo> children;
    children.reserve(node.children.size());
    for (const Plan& child : node.children) children.push_back(compile_node(child));

    const ColumnSignature& sig = report_.step_signatures[clauses_.size()];
    StepInfo info;
    info.name = "Step_" + std::to_string(clauses_.size() + 1);
    info.sig = &sig;

    std::string select;
    switch (node.op) {
      case OpKind::Scan: {
        const auto& args = std::get<ScanArgs>(node.args);
        const Table* table = schema_.find_table(args.table);
        Source src;
        src.prefix = sql_quote(table->name);
        table_sig_storage_.push_back(table_signature(*table));
        src.sig = &table_sig_storage_.back();
        for (const Column& c : table->columns) src.columns.push_back(c.name);

        info.out_cols = output_names(args.outputs, sig);
        select = args.distinct ? "SELECT DISTINCT " : "SELECT ";
        for (size_t i = 0; i < args.outputs.size(); ++i) {
          if (i) select += ", ";
          const auto& ref = std::get<ColumnRef>(args.outputs[i].expr);
          std::string full = ref.table ? ref.full_name() : table->name + "." + ref.column;
          select += compile_ref({src}, full);
          select += " AS " + sql_quote(info.out_cols[i]);
        }
        select += " FROM " + sql_quote(table->name);
        if (args.predicate) {
          select += " WHERE " + compile_predicate(*args.predicate, {src});
        }
        break;
      }
      case OpKind::Filter: {
        const auto& args = std::get<FilterArgs>(node.args);
        Source src = step_source(children[0]);
        info.out_cols = output_names(args.outputs, sig);
        select = args.distinct ? "SELECT DISTINCT " : "SELECT ";
        select += output_items(args.outputs, {src}, info.out_cols);
        select += " FROM " + children[0].name;
        select += " WHERE " + compile_predicate(args.predicate, {src});
        break;
      }
      case OpKind::Join: {
        const auto& args = std::get<JoinArgs>(node.args);
        Source left = step_source(children[0]);
        Source right = step_source(children[1]);
        info.out_cols = output_names(args.outputs, sig);
        select = "SELECT ";
        select += output_items(args.outputs, {left, right}, info.out_cols);
        select += " FROM " + children[0].name + " JOIN " + children[1].name;
        select += " ON " + compile_predicate(args.predicate, {left, right});
        break;
      }
      case OpKind::Aggregate: {
        const auto& args = std::get<AggregateArgs>(node.args);
        Source src = step_source(children[0]);
        info.out_cols = output_names(args.outputs, sig);
        select = "SELECT ";
        for (size_t i = 0; i < args.outputs.size(); ++i) {
          if (i) select += ", ";
          if (const auto* ref = std::get_if<ColumnRef>(&args.outputs[i].expr)) {
            select += compile_ref({src}, ref->full_name());
          } else {
            const auto& agg = std::get<AggApply>(args.outputs[i].expr);
            if (agg.countstar) {
              select += "COUNT(*)";
            } else {
              select += std::string(agg_func_name(agg.func)) + "(" +
                        compile_ref({src}, agg.operand.full_name()) + ")";
            }
          }
          select += " AS " + sql_quote(info.out_cols[i]);
        }
        select += " FROM " + children[0].name;
        if (!args.group_by.empty()) {
          select += " GROUP BY ";
          for (size_t i = 0; i < args.group_by.size(); ++i) {
            if (i) select += ", ";
            select += compile_ref({src}, args.group_by[i].full_name());
          }
        }
        break;
      }
      case OpKind::Except:
      case OpKind::Intersect:
      case OpKind::Union: {
        const auto& args = std::get<SetOpArgs>(node.args);
        Source left = step_source(children[0]);
        Source right = step_source(children[1]);
        info.out_cols = output_names(args.outputs, sig);
        select = "SELECT ";
        // Positional semantics: output i is the left input's column i, and
        // the right input contributes its column at the same position.
        for (size_t i = 0; i < info.out_cols.size(); ++i) {
          if (i) select += ", ";
          select += left.prefix + "." + sql_quote(left.columns[i]);
          select += " AS " + sql_quote(info.out_cols[i]);
        }
        select += " FROM " + children[0].name;
        select += node.op == OpKind::Except
                      ? " EXCEPT "
                      : (node.op == OpKind::Intersect ? " INTERSECT " : " UNION ");
        select += "SELECT ";
        for (size_t i = 0; i < info.out_cols.size(); ++i) {
          if (i) select += ", ";
          select += right.prefix + "." + sql_quote(right.columns[i]);
        }
        select += " FROM " + children[1].name;
        break;
      }
      case OpKind::Sort:
      case OpKind::TopSort: {
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
        Source src = step_source(children[0]);
        info.out_cols = output_names(*outputs, sig);
        select = "SELECT ";
        select += output_items(*outputs, {src}, info.out_cols);
        select += " FROM " + children[0].name;
        select += " ORDER BY ";
        for (size_t i = 0; i < keys->size(); ++i) {
          if (i) select += ", ";
          select += compile_ref({src}, (*keys)[i].ref.full_name());
          select += (*keys)[i].descending ? " DESC" : " ASC";
        }
        if (limit >= 0) {
          select += dialect_ == SqlDialect::Sqlite
                        ? " LIMIT " + std::to_string(limit)
                        : " FETCH FIRST " + std::to_string(limit) + " ROWS ONLY";
        }
        break;
      }
    }

    clauses_.push_back({info.name, std::move(select)});
    return info;
  }

  std::vector<CteClause> take_clauses() { return std::move(clauses_); }

 private:
  const Schema& schema_;
  SqlDialect dialect_;
  const ValidationReport& report_;
  std::vector<CteClause> clauses_;
  // Keeps Scan table signatures alive while sources point into them.
  std::vector<ColumnSignature> table_sig_storage_;

  static ColumnSignature table_signature(const Table& table) {
    ColumnSignature sig;
    for (const Column& c : table.columns) {
      sig.push_back({table.name + "." + c.name, c.dtype});
    }
    return sig;
  }

  static Source step_source(const StepInfo& step) {
    Source src;
    src.prefix = step.name;
    src.sig = step.sig;
    src.columns = step.out_cols;
    return src;
  }

  // SQL column names for a clause: alias wins, un-aliased aggregates become
  // agg_<position>, plain references keep their source's stable name.
  std::vector<std::string> output_names(const std::vector<OutputExpr>& outputs,
                                        const ColumnSignature& sig) const {
    std::vector<std::string> names;
    names.reserve(outputs.size());
    for (size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].alias) {
        names.push_back(sanitize(*outputs[i].alias));
      } else if (std::holds_alternative<AggApply>(outputs[i].expr)) {
        names.push_back("agg_" + std::to_string(i + 1));
      } else {
        names.push_back(sanitize(sig[i].name));
      }
    }
    // Dedupe case-insensitively; sanitization can collapse distinct names.
    std::set<std::string> seen;
    for (std::string& name : names) {
      std::string base = name;
      int n = 2;
      while (!seen.insert(fold_case(name)).second) {
        name = base + "_" + std::to_string(n++);
      }
    }
    return names;
  }

  static std::string compile_ref(const std::vector<Source>& scope, const std::string& name) {
    for (const Source& src : scope) {
      if (auto idx = find_in_signature(*src.sig, name)) {
        return src.prefix + "." + sql_quote(src.columns[*idx]);
      }
    }
    throw CompileError("unresolved reference '" + name + "' (plan not validated?)");
  }

  static std::string output_items(const std::vector<OutputExpr>& outputs,
                                  const std::vector<Source>& scope,
                                  const std::vector<std::string>& out_cols) {
    std::string items;
    for (size_t i = 0; i < outputs.size(); ++i) {
      if (i) items += ", ";
      const auto& ref = std::get<ColumnRef>(outputs[i].expr);
      items += compile_ref(scope, ref.full_name());
      items += " AS " + sql_quote(out_cols[i]);
    }
    return items;
  }

  static std::string compile_operand(const Operand& op, const std::vector<Source>& scope) {
    if (const auto* ref = std::get_if<ColumnRef>(&op)) {
      return compile_ref(scope, ref->full_name());
    }
    return sql_literal(std::get<Literal>(op).value);
  }

  static std::string compile_predicate(const Predicate& pred,
                                       const std::vector<Source>& scope) {
    if (const auto* cmp = std::get_if<Comparison>(&pred.node)) {
      return compile_operand(cmp->lhs, scope) + " " + compare_op_token(cmp->op) + " " +
             compile_operand(cmp->rhs, scope);
    }
    if (const auto* nc = std::get_if<NullCheck>(&pred.node)) {
      return compile_operand(nc->operand, scope) + (nc->negated ? " IS NOT NULL" : " IS NULL");
    }
    if (const auto* in = std::get_if<InList>(&pred.node)) {
      std::string out = compile_operand(in->operand, scope) + " IN (";
      for (size_t i = 0; i < in->items.size(); ++i) {
        if (i) out += ", ";
        out += sql_literal(in->items[i].value);
      }
      return out + ")";
    }
    const auto& combo = std::get<BoolCombo>(pred.node);
    if (combo.op == BoolOp::Not) {
      return "NOT (" + compile_predicate(combo.children[0], scope) + ")";
    }
    std::string out;
    const char* sep = combo.op == BoolOp::And ? " AND " : " OR ";
    for (size_t i = 0; i < combo.children.size(); ++i) {
      if (i) out += sep;
      out += "(" + compile_predicate(combo.children[i], scope) + ")";
    }
    return out;
  }
};

}  // namespace

CteProgram compile(const Plan& plan, const Schema& schema, SqlDialect dialect) {
  ValidationReport report = validate(plan, schema);
  if (!report.ok) {
    std::string msg = "plan failed validation";
    if (!report.diagnostics.empty()) msg += ": " + report.diagnostics.front().message;
    throw CompileError(msg);
  }
  Compiler compiler(schema, dialect, report);
  StepInfo root = compiler.compile_node(plan);

  CteProgram program;
  program.clauses = compiler.take_clauses();
  program.final_select = "SELECT * FROM " + root.name;

  // Re-apply the root ordering in the final select so that row order
  // survives the CTE boundary; only keys present in the output can be named.
  if (plan.op == OpKind::Sort || plan.op == OpKind::TopSort) {
    const ColumnSignature& child_sig =
        report.step_signatures[report.step_signatures.size() - 2];
    std::vector<size_t> positions = ordered_key_positions(plan, child_sig);
    const std::vector<SortKey>& keys = plan.op == OpKind::Sort
                                           ? std::get<SortArgs>(plan.args).keys
                                           : std::get<TopSortArgs>(plan.args).keys;
    if (!positions.empty()) {
      program.final_select += " ORDER BY ";
      for (size_t i = 0; i < positions.size(); ++i) {
        if (i) program.final_select += ", ";
        program.final_select += root.name + "." + sql_quote(root.out_cols[positions[i]]);
        program.final_select += keys[i].descending ? " DESC" : " ASC";
      }
    }
  }
  return program;
}

std::string render(const CteProgram& program) {
  std::string out = "WITH ";
  for (size_t i = 0; i < program.clauses.size(); ++i) {
    if (i) out += ",\n  ";
    out += program.clauses[i].name + " AS (" + program.clauses[i].select_sql + ")";
  }
  out += "\n" + program.final_select;
  return out;
}

}  // namespace qpl
