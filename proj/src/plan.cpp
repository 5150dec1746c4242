#include "qpl/plan.hpp"

#include <algorithm>

namespace qpl {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Scan: return "Scan";
    case OpKind::Aggregate: return "Aggregate";
    case OpKind::Filter: return "Filter";
    case OpKind::Join: return "Join";
    case OpKind::Except: return "Except";
    case OpKind::Intersect: return "Intersect";
    case OpKind::Union: return "Union";
    case OpKind::Sort: return "Sort";
    case OpKind::TopSort: return "TopSort";
  }
  return "?";
}

std::optional<OpKind> op_from_name(const std::string& name) {
  static const std::pair<const char*, OpKind> kOps[] = {
      {"Scan", OpKind::Scan},           {"Aggregate", OpKind::Aggregate},
      {"Filter", OpKind::Filter},       {"Join", OpKind::Join},
      {"Except", OpKind::Except},       {"Intersect", OpKind::Intersect},
      {"Union", OpKind::Union},         {"Sort", OpKind::Sort},
      {"TopSort", OpKind::TopSort},
  };
  for (const auto& [n, op] : kOps) {
    if (name == n) return op;
  }
  return std::nullopt;
}

int op_arity(OpKind op) {
  switch (op) {
    case OpKind::Scan:
      return 0;
    case OpKind::Aggregate:
    case OpKind::Filter:
    case OpKind::Sort:
    case OpKind::TopSort:
      return 1;
    case OpKind::Join:
    case OpKind::Except:
    case OpKind::Intersect:
    case OpKind::Union:
      return 2;
  }
  return 0;
}

const char* compare_op_token(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "<>";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
    case CompareOp::Like: return "LIKE";
  }
  return "?";
}

const char* agg_func_name(AggFunc f) {
  switch (f) {
    case AggFunc::Sum: return "SUM";
    case AggFunc::Count: return "COUNT";
    case AggFunc::Avg: return "AVG";
    case AggFunc::Min: return "MIN";
    case AggFunc::Max: return "MAX";
  }
  return "?";
}

std::optional<AggFunc> agg_func_from_name(const std::string& name) {
  if (name == "SUM") return AggFunc::Sum;
  if (name == "COUNT") return AggFunc::Count;
  if (name == "AVG") return AggFunc::Avg;
  if (name == "MIN") return AggFunc::Min;
  if (name == "MAX") return AggFunc::Max;
  return std::nullopt;
}

const std::vector<OutputExpr>& Plan::outputs() const {
  return std::visit([](const auto& a) -> const std::vector<OutputExpr>& { return a.outputs; },
                    args);
}

int depth(const Plan& plan) {
  int d = 0;
  for (const Plan& child : plan.children) {
    d = std::max(d, depth(child) + 1);
  }
  return d;
}

int step_count(const Plan& plan) {
  int n = 1;
  for (const Plan& child : plan.children) n += step_count(child);
  return n;
}

OpKind root_operator(const Plan& plan) { return plan.op; }

namespace {

void collect_post_order(const Plan& plan, std::vector<const Plan*>& out) {
  for (const Plan& child : plan.children) collect_post_order(child, out);
  out.push_back(&plan);
}

void collect_structural_errors(const Plan& plan, std::vector<std::string>& out) {
  for (const Plan& child : plan.children) collect_structural_errors(child, out);

  int arity = op_arity(plan.op);
  if (static_cast<int>(plan.children.size()) != arity) {
    out.push_back(std::string(op_name(plan.op)) + " has " +
                  std::to_string(plan.children.size()) + " children, expects " +
                  std::to_string(arity));
  }
  if (plan.outputs().empty()) {
    out.push_back(std::string(op_name(plan.op)) + " has an empty output list");
  }
  if (const auto* scan = std::get_if<ScanArgs>(&plan.args)) {
    if (plan.op != OpKind::Scan) out.push_back("scan args on a non-Scan node");
    if (scan->table.empty()) out.push_back("Scan has an empty table name");
  } else if (plan.op == OpKind::Scan) {
    out.push_back("Scan node without scan args");
  }
  if (const auto* sort = std::get_if<SortArgs>(&plan.args)) {
    if (sort->keys.empty()) out.push_back("Sort has no order-by keys");
  }
  if (const auto* top = std::get_if<TopSortArgs>(&plan.args)) {
    if (top->keys.empty()) out.push_back("TopSort has no order-by keys");
    if (top->rows < 1) out.push_back("TopSort row count must be at least 1");
  }
}

}  // namespace

std::vector<const Plan*> sub_plans(const Plan& plan) {
  std::vector<const Plan*> out;
  collect_post_order(plan, out);
  return out;
}

std::vector<std::string> structural_errors(const Plan& plan) {
  std::vector<std::string> out;
  collect_structural_errors(plan, out);
  return out;
}

}  // namespace qpl
