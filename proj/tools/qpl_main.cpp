#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpl/compiler.hpp"
#include "qpl/eval.hpp"
#include "qpl/generator.hpp"
#include "qpl/interpreter.hpp"
#include "qpl/parser.hpp"
#include "qpl/schema.hpp"
#include "qpl/sql_backend.hpp"
#include "qpl/validator.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kOperationalError = 1;
constexpr int kSemanticFailure = 2;

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw qpl::SchemaError("cannot open input file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Line protocol escapes: "\n" carries a newline, "\\" a backslash.
std::string unescape_line(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      if (s[i + 1] == 'n') {
        out.push_back('\n');
        ++i;
        continue;
      }
      if (s[i + 1] == '\\') {
        out.push_back('\\');
        ++i;
        continue;
      }
    }
    out.push_back(s[i]);
  }
  return out;
}

void print_diagnostics(const std::vector<qpl::Diagnostic>& diagnostics) {
  for (const qpl::Diagnostic& d : diagnostics) {
    std::cerr << (d.severity == qpl::Severity::Error ? "error" : "warning");
    if (d.end > d.begin || d.begin > 0) std::cerr << " at byte " << d.begin;
    std::cerr << ": " << d.message << "\n";
  }
}

qpl::Plan parse_or_exit(const std::string& text, int& status) {
  qpl::ParseResult result = qpl::parse(text);
  if (!result.ok()) {
    print_diagnostics(result.diagnostics);
    status = kSemanticFailure;
    return {};
  }
  status = kOk;
  return *result.plan;
}

int cmd_parse(const std::string& input_path, const std::string& schema_path) {
  std::string text = read_input(input_path);
  int status;
  qpl::Plan plan = parse_or_exit(text, status);
  if (status != kOk) return status;
  if (!schema_path.empty()) {
    qpl::Schema schema = qpl::load_schema_file(schema_path);
    qpl::ValidationReport report = qpl::validate(plan, schema);
    if (!report.ok) {
      print_diagnostics(report.diagnostics);
      return kSemanticFailure;
    }
  }
  std::cout << qpl::serialize(plan) << "\n";
  std::cout << "depth: " << qpl::depth(plan) << "\n";
  std::cout << "steps: " << qpl::step_count(plan) << "\n";
  return kOk;
}

int cmd_validate(const std::string& input_path, const std::string& schema_path) {
  std::string text = read_input(input_path);
  int status;
  qpl::Plan plan = parse_or_exit(text, status);
  if (status != kOk) return status;
  qpl::Schema schema = qpl::load_schema_file(schema_path);
  qpl::ValidationReport report = qpl::validate(plan, schema);
  if (!report.ok) {
    print_diagnostics(report.diagnostics);
    return kSemanticFailure;
  }
  const qpl::ColumnSignature& sig = report.step_signatures.back();
  std::cout << "valid\n";
  for (const qpl::SignatureColumn& c : sig) {
    std::cout << c.name << ": " << qpl::dtype_name(c.dtype) << "\n";
  }
  return kOk;
}

int cmd_compile(const std::string& input_path, const std::string& schema_path,
                const std::string& dialect_name) {
  std::string text = read_input(input_path);
  int status;
  qpl::Plan plan = parse_or_exit(text, status);
  if (status != kOk) return status;
  qpl::Schema schema = qpl::load_schema_file(schema_path);
  qpl::SqlDialect dialect =
      dialect_name == "ansi" ? qpl::SqlDialect::Ansi : qpl::SqlDialect::Sqlite;
  try {
    qpl::CteProgram program = qpl::compile(plan, schema, dialect);
    std::cout << qpl::render(program) << "\n";
  } catch (const qpl::CompileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSemanticFailure;
  }
  return kOk;
}

int cmd_run(const std::string& input_path, const std::string& schema_path,
            const std::string& data_dir, const std::string& format, bool steps) {
  std::string text = read_input(input_path);
  int status;
  qpl::Plan plan = parse_or_exit(text, status);
  if (status != kOk) return status;
  qpl::Schema schema = qpl::load_schema_file(schema_path);
  qpl::Database db = qpl::load_database(schema, data_dir);
  qpl::ValidationReport report = qpl::validate(plan, schema);
  if (!report.ok) {
    print_diagnostics(report.diagnostics);
    return kSemanticFailure;
  }
  if (!steps) {
    qpl::Relation out = qpl::interpret(plan, db);
    if (format == "json") {
      std::cout << qpl::relation_to_json(out) << "\n";
    } else {
      std::cout << qpl::relation_to_csv(out);
    }
    return kOk;
  }
  std::vector<qpl::StepResult> results = qpl::interpret_all_steps(plan, db);
  std::vector<const qpl::Plan*> nodes = qpl::sub_plans(plan);
  if (format == "json") {
    nlohmann::json doc = nlohmann::json::array();
    for (const qpl::StepResult& step : results) {
      nlohmann::json columns = nlohmann::json::array();
      for (const qpl::SignatureColumn& c : step.relation.signature) columns.push_back(c.name);
      doc.push_back({{"step", step.index},
                     {"op", qpl::op_name(nodes[step.index - 1]->op)},
                     {"columns", columns},
                     {"rows", nlohmann::json::parse(qpl::relation_to_json(step.relation))}});
    }
    std::cout << doc.dump(2) << "\n";
  } else {
    for (const qpl::StepResult& step : results) {
      std::cout << "# Step " << step.index << " (" << qpl::op_name(nodes[step.index - 1]->op)
                << ")\n";
      std::cout << qpl::relation_to_csv(step.relation);
      std::cout << "\n";
    }
  }
  return kOk;
}

int cmd_compare(const std::string& gold_path, const std::string& pred_path,
                const std::string& schema_path, const std::string& data_dir) {
  std::string gold_text = read_input(gold_path);
  std::string pred_text = read_input(pred_path);
  int status;
  qpl::Plan gold = parse_or_exit(gold_text, status);
  if (status != kOk) return status;
  qpl::Plan pred = parse_or_exit(pred_text, status);
  if (status != kOk) return status;
  qpl::Schema schema = qpl::load_schema_file(schema_path);
  qpl::Database db = qpl::load_database(schema, data_dir);
  std::string reason;
  try {
    if (qpl::compare_plans(gold, pred, db, &reason)) {
      std::cout << "match\n";
      return kOk;
    }
  } catch (const qpl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSemanticFailure;
  }
  std::cout << "mismatch: " << reason << "\n";
  return kSemanticFailure;
}

int cmd_eval(const std::string& dataset_path, const std::string& schemas_dir,
             const std::string& data_dir, const std::string& pred_path,
             const std::string& json_path) {
  qpl::DatasetLoadResult loaded = qpl::load_dataset_jsonl(dataset_path);
  for (const std::string& err : loaded.errors) std::cerr << "skipped " << err << "\n";
  if (!loaded.errors.empty()) {
    std::cerr << loaded.errors.size() << " malformed dataset line(s) skipped\n";
  }

  if (!pred_path.empty()) {
    std::ifstream in(pred_path, std::ios::binary);
    if (!in) throw qpl::SchemaError("cannot open prediction file '" + pred_path + "'");
    std::string line;
    size_t i = 0;
    while (std::getline(in, line) && i < loaded.entries.size()) {
      if (!line.empty()) loaded.entries[i].prediction = unescape_line(line);
      ++i;
    }
  }

  bool any_prediction = false;
  for (const qpl::DatasetEntry& e : loaded.entries) any_prediction |= e.prediction.has_value();

  if (!any_prediction) {
    // Stats-only run: depth histogram of the gold plans.
    qpl::DatasetStats stats = qpl::dataset_stats(loaded.entries);
    for (const qpl::EvalFailure& f : stats.errors) {
      std::cerr << "entry " << f.index << ": " << f.message << "\n";
    }
    std::cout << qpl::render_stats_table(stats);
    return kOk;
  }

  if (schemas_dir.empty() || data_dir.empty()) {
    throw qpl::SchemaError("evaluating predictions requires --schemas and --data");
  }
  qpl::DatabaseRegistry registry(schemas_dir, data_dir);
  qpl::EvalReport report = qpl::evaluate_dataset(loaded.entries, registry);
  if (report.skipped) {
    std::cerr << report.skipped << " entr" << (report.skipped == 1 ? "y" : "ies")
              << " with unusable gold plans skipped\n";
  }
  std::cout << "Execution match by depth\n";
  std::cout << qpl::render_depth_table(report) << "\n";
  std::cout << "Root operator prediction\n";
  std::cout << qpl::render_operator_table(report);
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw qpl::SchemaError("cannot write JSON report to '" + json_path + "'");
    out << qpl::report_to_json(report) << "\n";
  }
  return kOk;
}

int cmd_stats(const std::string& dataset_path) {
  qpl::DatasetLoadResult loaded = qpl::load_dataset_jsonl(dataset_path);
  for (const std::string& err : loaded.errors) std::cerr << "skipped " << err << "\n";
  qpl::DatasetStats stats = qpl::dataset_stats(loaded.entries);
  for (const qpl::EvalFailure& f : stats.errors) {
    std::cerr << "entry " << f.index << ": " << f.message << "\n";
  }
  std::cout << qpl::render_stats_table(stats);
  return kOk;
}

int cmd_check_prefix(const std::string& schema_path) {
  qpl::Schema schema = qpl::load_schema_file(schema_path);
  std::string line;
  while (std::getline(std::cin, line)) {
    std::string prefix = unescape_line(line);
    qpl::PrefixVerdict verdict = qpl::check_prefix_with_schema(prefix, schema);
    switch (verdict.state) {
      case qpl::PrefixState::ValidPrefix:
        std::cout << "VALID\n";
        break;
      case qpl::PrefixState::Complete:
        std::cout << "COMPLETE\n";
        break;
      case qpl::PrefixState::Invalid:
        std::cout << "INVALID " << verdict.position << " " << verdict.reason << "\n";
        break;
    }
    std::cout.flush();
  }
  return kOk;
}

int cmd_difftest(uint64_t seed, size_t trials, bool verbose) {
  qpl::SqliteBackend backend;
  qpl::DiffReport report = qpl::differential_test(seed, trials, backend);
  std::cout << "trials: " << report.trials << "\n";
  std::cout << "mismatches: " << report.mismatches.size() << "\n";
  if (verbose) {
    for (const auto& [op, n] : report.op_counts) {
      std::cout << op << ": " << n << " nodes\n";
    }
  }
  size_t shown = 0;
  for (const qpl::DiffMismatch& m : report.mismatches) {
    if (!verbose && shown++ >= 5) {
      std::cout << "... (" << report.mismatches.size() - shown + 1 << " more)\n";
      break;
    }
    std::cout << "trial " << m.trial << ": " << m.reason << "\n";
    std::cout << "  plan: " << m.plan_text << "\n";
    std::cout << "  sql: " << m.sql << "\n";
  }
  return report.mismatches.empty() ? kOk : kSemanticFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QPL toolchain: parse, validate, compile, execute and evaluate query plans"};
  app.require_subcommand(1);

  std::string input_path, schema_path, data_dir, schemas_dir, dataset_path, pred_path;
  std::string json_path, dialect = "sqlite", format = "csv";
  std::string gold_path;
  bool steps = false, verbose = false;
  uint64_t seed = 42;
  size_t trials = 500;

  CLI::App* parse_cmd = app.add_subcommand("parse", "Parse a plan and print its canonical form");
  parse_cmd->add_option("input", input_path, "plan file (stdin when omitted)");
  parse_cmd->add_option("--schema", schema_path, "schema JSON to validate against");

  CLI::App* validate_cmd = app.add_subcommand("validate", "Validate a plan against a schema");
  validate_cmd->add_option("input", input_path, "plan file (stdin when omitted)");
  validate_cmd->add_option("--schema", schema_path, "schema JSON")->required();

  CLI::App* compile_cmd = app.add_subcommand("compile", "Compile a plan to a SQL CTE program");
  compile_cmd->add_option("input", input_path, "plan file (stdin when omitted)");
  compile_cmd->add_option("--schema", schema_path, "schema JSON")->required();
  compile_cmd->add_option("--dialect", dialect, "sqlite|ansi")
      ->check(CLI::IsMember({"sqlite", "ansi"}));

  CLI::App* run_cmd = app.add_subcommand("run", "Execute a plan with the reference interpreter");
  run_cmd->add_option("input", input_path, "plan file (stdin when omitted)");
  run_cmd->add_option("--schema", schema_path, "schema JSON")->required();
  run_cmd->add_option("--data", data_dir, "directory with <table>.csv files")->required();
  run_cmd->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_flag("--steps", steps, "print every sub-plan's result, bottom-up");

  CLI::App* compare_cmd = app.add_subcommand("compare", "Execution-match two plans on a database");
  compare_cmd->add_option("gold", gold_path, "gold plan file")->required();
  compare_cmd->add_option("pred", input_path, "predicted plan file")->required();
  compare_cmd->add_option("--schema", schema_path, "schema JSON")->required();
  compare_cmd->add_option("--data", data_dir, "directory with <table>.csv files")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate predictions over a dataset");
  eval_cmd->add_option("--dataset", dataset_path, "JSON Lines dataset")->required();
  eval_cmd->add_option("--schemas", schemas_dir, "directory with <db_id>.json schemas");
  eval_cmd->add_option("--data", data_dir, "directory with <db_id>/<table>.csv data");
  eval_cmd->add_option("--pred", pred_path, "prediction file, one plan per line");
  eval_cmd->add_option("--json", json_path, "write the JSON report here");

  CLI::App* stats_cmd = app.add_subcommand("stats", "Depth histogram of a dataset");
  stats_cmd->add_option("--dataset", dataset_path, "JSON Lines dataset")->required();

  CLI::App* prefix_cmd = app.add_subcommand(
      "check-prefix", "Verdict loop for decoder integration (one prefix per line)");
  prefix_cmd->add_option("--schema", schema_path, "schema JSON")->required();

  CLI::App* diff_cmd = app.add_subcommand("difftest", "Differential test against SQLite");
  diff_cmd->add_option("--seed", seed, "generator seed");
  diff_cmd->add_option("--trials", trials, "number of generated cases");
  diff_cmd->add_flag("--verbose", verbose, "print operator coverage and all mismatches");

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse_cmd->parsed()) return cmd_parse(input_path, schema_path);
    if (validate_cmd->parsed()) return cmd_validate(input_path, schema_path);
    if (compile_cmd->parsed()) return cmd_compile(input_path, schema_path, dialect);
    if (run_cmd->parsed()) return cmd_run(input_path, schema_path, data_dir, format, steps);
    if (compare_cmd->parsed()) return cmd_compare(gold_path, input_path, schema_path, data_dir);
    if (eval_cmd->parsed())
      return cmd_eval(dataset_path, schemas_dir, data_dir, pred_path, json_path);
    if (stats_cmd->parsed()) return cmd_stats(dataset_path);
    if (prefix_cmd->parsed()) return cmd_check_prefix(schema_path);
    if (diff_cmd->parsed()) return cmd_difftest(seed, trials, verbose);
  } catch (const qpl::SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  } catch (const qpl::BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  } catch (const qpl::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSemanticFailure;
  } catch (const qpl::CompileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSemanticFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOperationalError;
  }
  return kOperationalError;
}
