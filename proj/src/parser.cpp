#include "qpl/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace qpl {

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}
bool is_space_char(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

// Case-sensitive keyword prefix test.
bool cs_prefix(const std::string& prefix, std::string_view full) {
  return prefix.size() <= full.size() && full.substr(0, prefix.size()) == prefix;
}

// Thrown on any dead end. `incomplete` marks the input ending while a valid
// continuation still exists; that is the ValidPrefix case, everything else
// is a hard mismatch.
struct ParseFail {
  size_t pos = 0;
  std::string reason;
  bool incomplete = false;
};

[[noreturn]] void fail_at(size_t pos, std::string reason) {
  throw ParseFail{pos, std::move(reason), false};
}
[[noreturn]] void end_of_input(size_t pos) {
  throw ParseFail{pos, "unexpected end of input", true};
}

// Where a reference appears; controls which bare identifiers are legal.
enum class RefContext {
  LeafOutput,     // Scan output: bare names resolve against the scanned table
  LeafPredicate,  // Scan predicate: only qualified references
  Inner,          // non-leaf clauses: bare names may be aliases from below
};

struct Word {
  std::string text;
  size_t pos = 0;
  bool open = false;  // token runs up to the end of the input
};

class Parser {
 public:
  Parser(std::string_view text, const Schema* schema) : text_(text), schema_(schema) {}

  Plan parse_complete() {
    Plan plan = parse_plan();
    skip_ws();
    if (!at_end()) fail_at(pos_, "trailing content after plan");
    return plan;
  }

 private:
  std::string_view text_;
  const Schema* schema_;
  size_t pos_ = 0;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!at_end() && is_space_char(text_[pos_])) ++pos_;
  }

  void expect_char(char c, const std::string& what) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    if (peek() != c) fail_at(pos_, "expected '" + std::string(1, c) + "' " + what);
    ++pos_;
  }

  Word read_word(const std::string& what) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    if (!is_ident_start(peek())) fail_at(pos_, "expected " + what);
    Word w;
    w.pos = pos_;
    while (!at_end() && is_ident_char(peek())) w.text.push_back(text_[pos_++]);
    w.open = at_end();
    return w;
  }

  void expect_keyword(const Word& w, std::string_view kw) {
    if (w.text == kw) return;
    if (w.open && cs_prefix(w.text, kw)) end_of_input(w.pos);
    fail_at(w.pos, "expected '" + std::string(kw) + "'");
  }

  size_t expect_keyword_oneof(const Word& w, const std::vector<std::string_view>& kws) {
    for (size_t i = 0; i < kws.size(); ++i) {
      if (w.text == kws[i]) return i;
    }
    if (w.open) {
      for (std::string_view kw : kws) {
        if (cs_prefix(w.text, kw)) end_of_input(w.pos);
      }
    }
    std::string msg = "expected ";
    for (size_t i = 0; i < kws.size(); ++i) {
      if (i) msg += i + 1 == kws.size() ? " or " : ", ";
      msg += "'" + std::string(kws[i]) + "'";
    }
    fail_at(w.pos, msg);
  }

  // --- schema-aware identifier checks -----------------------------------

  bool any_table_prefix(const std::string& s) const {
    for (const Table& t : schema_->tables) {
      if (iprefix(s, t.name)) return true;
    }
    return false;
  }

  static bool any_column_prefix(const Table& table, const std::string& s) {
    for (const Column& c : table.columns) {
      if (iprefix(s, c.name)) return true;
    }
    return false;
  }

  bool open_ref_extendable(const Word& w, RefContext ctx, const Table* leaf_table) const {
    if (!schema_) return true;
    switch (ctx) {
      case RefContext::Inner:
        return true;  // could become an alias reference
      case RefContext::LeafOutput:
        return (leaf_table && any_column_prefix(*leaf_table, w.text)) ||
               (leaf_table && iprefix(w.text, leaf_table->name));
      case RefContext::LeafPredicate:
        return any_table_prefix(w.text);
    }
    return true;
  }

  // --- references and aggregate forms ------------------------------------

  // Parses the remainder of a reference whose first word is already read.
  // When `allow_apply` is set (Aggregate output position) an aggregate form
  // becomes an application; elsewhere it is a reference to a column whose
  // name is the verbatim aggregate text.
  std::variant<ColumnRef, AggApply> parse_ref_tail(Word w, RefContext ctx,
                                                   const Table* leaf_table,
                                                   bool allow_apply) {
    if (w.open) {
      if (open_ref_extendable(w, ctx, leaf_table)) end_of_input(w.pos);
      fail_at(w.pos, "no schema name extends identifier '" + w.text + "'");
    }
    auto agg = agg_func_from_name(w.text);
    if (agg && !at_end() && peek() == '(') {
      if (ctx != RefContext::Inner) {
        fail_at(w.pos, "aggregate expressions are not allowed in Scan clauses");
      }
      ++pos_;  // '('
      skip_ws();
      if (at_end()) end_of_input(pos_);
      bool countstar = false;
      ColumnRef operand;
      std::string inner_text;
      if (peek() == '*') {
        if (*agg != AggFunc::Count) {
          fail_at(pos_, "only COUNT may take '*'");
        }
        ++pos_;
        countstar = true;
        inner_text = "*";
      } else {
        Word inner = read_word("a column reference");
        auto ref = parse_ref_tail(std::move(inner), ctx, leaf_table, false);
        operand = std::get<ColumnRef>(ref);
        inner_text = operand.full_name();
      }
      expect_char(')', "to close the aggregate expression");
      if (allow_apply) {
        AggApply apply;
        apply.func = *agg;
        apply.countstar = countstar;
        if (!countstar) apply.operand = operand;
        return apply;
      }
      ColumnRef ref;
      ref.column = std::string(agg_func_name(*agg)) + "(" + inner_text + ")";
      return ref;
    }
    if (!at_end() && peek() == '.') {
      // Qualified table.column; the qualifier is complete at the dot.
      const Table* table = nullptr;
      if (schema_) {
        table = schema_->find_table(w.text);
        if (!table) fail_at(w.pos, "unknown table '" + w.text + "'");
      }
      ++pos_;  // '.'
      if (at_end()) end_of_input(pos_);
      if (!is_ident_start(peek())) fail_at(pos_, "expected a column name after '.'");
      Word col;
      col.pos = pos_;
      while (!at_end() && is_ident_char(peek())) col.text.push_back(text_[pos_++]);
      col.open = at_end();
      if (schema_) {
        if (col.open) {
          if (!any_column_prefix(*table, col.text)) {
            fail_at(col.pos, "unknown column '" + col.text + "' in table '" + table->name + "'");
          }
          end_of_input(col.pos);
        }
        if (!table->find_column(col.text)) {
          fail_at(col.pos, "unknown column '" + col.text + "' in table '" + table->name + "'");
        }
      } else if (col.open) {
        end_of_input(col.pos);
      }
      ColumnRef ref;
      ref.table = w.text;
      ref.column = col.text;
      return ref;
    }
    // Bare identifier.
    switch (ctx) {
      case RefContext::LeafOutput:
        if (schema_ && leaf_table && !leaf_table->find_column(w.text)) {
          fail_at(w.pos, "unknown column '" + w.text + "' in table '" + leaf_table->name + "'");
        }
        break;
      case RefContext::LeafPredicate:
        fail_at(w.pos, "column references in a Scan predicate must be qualified");
      case RefContext::Inner:
        break;  // may be an alias introduced below
    }
    ColumnRef ref;
    ref.column = w.text;
    return ref;
  }

  ColumnRef parse_ref(RefContext ctx, const Table* leaf_table) {
    Word w = read_word("a column reference");
    auto r = parse_ref_tail(std::move(w), ctx, leaf_table, false);
    return std::get<ColumnRef>(r);
  }

  // --- literals -----------------------------------------------------------

  Value parse_string_literal() {
    size_t start = pos_;
    ++pos_;  // opening quote
    std::string out;
    for (;;) {
      if (at_end()) end_of_input(start);
      char c = text_[pos_];
      if (c == '\'') {
        if (pos_ + 1 < text_.size() && text_[pos_ + 1] == '\'') {
          out.push_back('\'');
          pos_ += 2;
        } else {
          ++pos_;  // closing quote (a quote at end of input closes too)
          return Value::text(std::move(out));
        }
      } else {
        out.push_back(c);
        ++pos_;
      }
    }
  }

  struct NumberToken {
    Value value;
    size_t pos = 0;
    bool open = false;
    bool is_real = false;
  };

  NumberToken parse_number() {
    skip_ws();
    NumberToken tok;
    tok.pos = pos_;
    size_t start = pos_;
    if (!at_end() && peek() == '-') ++pos_;
    if (at_end()) end_of_input(start);
    if (!is_digit(peek())) fail_at(pos_, "expected a number");
    while (!at_end() && is_digit(peek())) ++pos_;
    bool real = false;
    if (!at_end() && peek() == '.') {
      real = true;
      ++pos_;
      if (at_end()) end_of_input(start);
      if (!is_digit(peek())) fail_at(pos_, "expected digits after the decimal point");
      while (!at_end() && is_digit(peek())) ++pos_;
    }
    if (!at_end() && (peek() == 'e' || peek() == 'E')) {
      real = true;
      ++pos_;
      if (!at_end() && (peek() == '+' || peek() == '-')) ++pos_;
      if (at_end()) end_of_input(start);
      if (!is_digit(peek())) fail_at(pos_, "expected digits in the exponent");
      while (!at_end() && is_digit(peek())) ++pos_;
    }
    std::string lexeme(text_.substr(start, pos_ - start));
    tok.open = at_end();
    tok.is_real = real;
    if (real) {
      tok.value = Value::real(std::strtod(lexeme.c_str(), nullptr));
    } else {
      int64_t v = 0;
      auto res = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), v);
      if (res.ec != std::errc()) fail_at(start, "integer literal out of range");
      tok.value = Value::integer(v);
    }
    return tok;
  }

  Literal parse_literal() {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    char c = peek();
    if (c == '\'') return Literal{parse_string_literal()};
    if (c == '-' || is_digit(c)) return Literal{parse_number().value};
    if (is_ident_start(c)) {
      Word w = read_word("a literal");
      if (!w.open && w.text == "NULL") return Literal{Value::null()};
      if (w.open && cs_prefix(w.text, "NULL")) end_of_input(w.pos);
      fail_at(w.pos, "expected a literal");
    }
    fail_at(pos_, "expected a literal");
  }

  // --- predicates ---------------------------------------------------------

  Operand parse_operand(RefContext ctx, const Table* leaf_table) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    char c = peek();
    if (c == '\'') return Literal{parse_string_literal()};
    if (c == '-' || is_digit(c)) return Literal{parse_number().value};
    if (!is_ident_start(c)) fail_at(pos_, "expected a value or column reference");
    Word w = read_word("a value or column reference");
    if (!w.open && w.text == "NULL") return Literal{Value::null()};
    if (w.open && cs_prefix(w.text, "NULL")) end_of_input(w.pos);
    auto r = parse_ref_tail(std::move(w), ctx, leaf_table, false);
    return std::get<ColumnRef>(r);
  }

  // The right operand is parsed into a local before the Comparison is
  // built; a throw during aggregate initialization would leak the already
  // moved-in members under gcc (PR 66139).
  Predicate finish_comparison(CompareOp op, Operand lhs, RefContext ctx,
                              const Table* leaf_table) {
    Operand rhs = parse_operand(ctx, leaf_table);
    return Predicate{Comparison{op, std::move(lhs), std::move(rhs)}};
  }

  Predicate parse_atom_rest(Operand lhs, RefContext ctx, const Table* leaf_table) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    char c = peek();
    if (c == '=') {
      ++pos_;
      return finish_comparison(CompareOp::Eq, std::move(lhs), ctx, leaf_table);
    }
    if (c == '<') {
      ++pos_;
      CompareOp op = CompareOp::Lt;
      if (!at_end() && peek() == '>') {
        op = CompareOp::Ne;
        ++pos_;
      } else if (!at_end() && peek() == '=') {
        op = CompareOp::Le;
        ++pos_;
      }
      return finish_comparison(op, std::move(lhs), ctx, leaf_table);
    }
    if (c == '>') {
      ++pos_;
      CompareOp op = CompareOp::Gt;
      if (!at_end() && peek() == '=') {
        op = CompareOp::Ge;
        ++pos_;
      }
      return finish_comparison(op, std::move(lhs), ctx, leaf_table);
    }
    if (is_ident_start(c)) {
      Word w = read_word("a comparison");
      if (!w.open && w.text == "IS") {
        Word w2 = read_word("'NOT' or 'NULL'");
        if (!w2.open && w2.text == "NOT") {
          Word w3 = read_word("'NULL'");
          expect_keyword(w3, "NULL");
          return Predicate{NullCheck{std::move(lhs), true}};
        }
        if (w2.open && (cs_prefix(w2.text, "NOT") || cs_prefix(w2.text, "NULL"))) {
          end_of_input(w2.pos);
        }
        expect_keyword(w2, "NULL");
        return Predicate{NullCheck{std::move(lhs), false}};
      }
      if (!w.open && w.text == "IN") {
        expect_char('(', "after 'IN'");
        InList in;
        in.operand = std::move(lhs);
        in.items.push_back(parse_literal());
        for (;;) {
          size_t save = pos_;
          skip_ws();
          if (!at_end() && peek() == ',') {
            ++pos_;
            in.items.push_back(parse_literal());
          } else {
            pos_ = save;
            break;
          }
        }
        expect_char(')', "to close the IN list");
        return Predicate{std::move(in)};
      }
      if (!w.open && w.text == "LIKE") {
        return finish_comparison(CompareOp::Like, std::move(lhs), ctx, leaf_table);
      }
      if (w.open && (cs_prefix(w.text, "IS") || cs_prefix(w.text, "IN") || cs_prefix(w.text, "LIKE"))) {
        end_of_input(w.pos);
      }
      fail_at(w.pos, "expected a comparison operator, 'IS', 'IN' or 'LIKE'");
    }
    fail_at(pos_, "expected a comparison operator");
  }

  Predicate parse_atom(RefContext ctx, const Table* leaf_table) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    if (peek() == '(') {
      ++pos_;
      Predicate inner = parse_or(ctx, leaf_table);
      expect_char(')', "to close the group");
      return inner;
    }
    Operand lhs = parse_operand(ctx, leaf_table);
    return parse_atom_rest(std::move(lhs), ctx, leaf_table);
  }

  Predicate parse_not(RefContext ctx, const Table* leaf_table) {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    if (is_ident_start(peek())) {
      size_t save = pos_;
      Word w = read_word("a predicate");
      if (!w.open && w.text == "NOT") {
        BoolCombo combo;
        combo.op = BoolOp::Not;
        combo.children.push_back(parse_not(ctx, leaf_table));
        return Predicate{std::move(combo)};
      }
      if (w.open && cs_prefix(w.text, "NOT")) end_of_input(w.pos);
      pos_ = save;
    }
    return parse_atom(ctx, leaf_table);
  }

  // Returns true and consumes the connective when the next word equals `kw`.
  bool take_connective(std::string_view kw) {
    size_t save = pos_;
    skip_ws();
    if (at_end() || !is_ident_start(peek())) {
      pos_ = save;
      return false;
    }
    Word w = read_word("a connective");
    if (!w.open && w.text == kw) return true;
    if (w.open && cs_prefix(w.text, kw)) end_of_input(w.pos);
    pos_ = save;
    return false;
  }

  Predicate parse_and(RefContext ctx, const Table* leaf_table) {
    Predicate first = parse_not(ctx, leaf_table);
    if (!take_connective("AND")) return first;
    BoolCombo combo;
    combo.op = BoolOp::And;
    combo.children.push_back(std::move(first));
    do {
      combo.children.push_back(parse_not(ctx, leaf_table));
    } while (take_connective("AND"));
    return Predicate{std::move(combo)};
  }

  Predicate parse_or(RefContext ctx, const Table* leaf_table) {
    Predicate first = parse_and(ctx, leaf_table);
    if (!take_connective("OR")) return first;
    BoolCombo combo;
    combo.op = BoolOp::Or;
    combo.children.push_back(std::move(first));
    do {
      combo.children.push_back(parse_and(ctx, leaf_table));
    } while (take_connective("OR"));
    return Predicate{std::move(combo)};
  }

  Predicate parse_predicate_clause(RefContext ctx, const Table* leaf_table) {
    expect_char('[', "to open the predicate");
    Predicate pred = parse_or(ctx, leaf_table);
    expect_char(']', "to close the predicate");
    return pred;
  }

  // --- output lists and sort keys ------------------------------------------

  std::optional<std::string> parse_optional_alias() {
    size_t save = pos_;
    skip_ws();
    if (at_end() || !is_ident_start(peek())) {
      pos_ = save;
      return std::nullopt;
    }
    Word w = read_word("'AS'");
    if (!w.open && w.text == "AS") {
      Word alias = read_word("an alias name");
      if (alias.open) end_of_input(alias.pos);
      return alias.text;
    }
    if (w.open && cs_prefix(w.text, "AS")) end_of_input(w.pos);
    pos_ = save;
    return std::nullopt;
  }

  OutputExpr parse_output_expr(RefContext ctx, const Table* leaf_table, bool agg_node) {
    Word w = read_word("a column reference");
    OutputExpr out;
    out.expr = std::visit([](auto&& v) -> std::variant<ColumnRef, AggApply> { return v; },
                          parse_ref_tail(std::move(w), ctx, leaf_table, agg_node));
    out.alias = parse_optional_alias();
    return out;
  }

  std::vector<OutputExpr> parse_output_list(RefContext ctx, const Table* leaf_table,
                                            bool agg_node) {
    expect_char('[', "to open the output list");
    std::vector<OutputExpr> outs;
    outs.push_back(parse_output_expr(ctx, leaf_table, agg_node));
    for (;;) {
      size_t save = pos_;
      skip_ws();
      if (!at_end() && peek() == ',') {
        ++pos_;
        outs.push_back(parse_output_expr(ctx, leaf_table, agg_node));
      } else {
        pos_ = save;
        break;
      }
    }
    expect_char(']', "to close the output list");
    return outs;
  }

  std::vector<ColumnRef> parse_ref_list(RefContext ctx) {
    expect_char('[', "to open the column list");
    std::vector<ColumnRef> refs;
    refs.push_back(parse_ref(ctx, nullptr));
    for (;;) {
      size_t save = pos_;
      skip_ws();
      if (!at_end() && peek() == ',') {
        ++pos_;
        refs.push_back(parse_ref(ctx, nullptr));
      } else {
        pos_ = save;
        break;
      }
    }
    expect_char(']', "to close the column list");
    return refs;
  }

  std::vector<SortKey> parse_sort_keys() {
    expect_char('[', "to open the key list");
    std::vector<SortKey> keys;
    keys.push_back(parse_sort_key());
    for (;;) {
      size_t save = pos_;
      skip_ws();
      if (!at_end() && peek() == ',') {
        ++pos_;
        keys.push_back(parse_sort_key());
      } else {
        pos_ = save;
        break;
      }
    }
    expect_char(']', "to close the key list");
    return keys;
  }

  SortKey parse_sort_key() {
    SortKey key;
    key.ref = parse_ref(RefContext::Inner, nullptr);
    size_t save = pos_;
    skip_ws();
    if (!at_end() && is_ident_start(peek())) {
      Word w = read_word("'ASC' or 'DESC'");
      if (!w.open && w.text == "ASC") {
        key.descending = false;
        return key;
      }
      if (!w.open && w.text == "DESC") {
        key.descending = true;
        return key;
      }
      if (w.open && (cs_prefix(w.text, "ASC") || cs_prefix(w.text, "DESC"))) {
        end_of_input(w.pos);
      }
      pos_ = save;
    } else {
      pos_ = save;
    }
    return key;
  }

  bool parse_bool_clause() {
    expect_char('[', "to open the flag");
    Word w = read_word("'true' or 'false'");
    size_t idx = expect_keyword_oneof(w, {"true", "false"});
    expect_char(']', "to close the flag");
    return idx == 0;
  }

  // --- plans ---------------------------------------------------------------

  Plan parse_scan_leaf() {
    Word kw = read_word("'Table'");
    expect_keyword(kw, "Table");
    expect_char('[', "to open the table name");
    Word t = read_word("a table name");
    const Table* table = nullptr;
    if (t.open) {
      if (schema_ && !any_table_prefix(t.text)) {
        fail_at(t.pos, "unknown table '" + t.text + "'");
      }
      end_of_input(t.pos);
    }
    if (schema_) {
      table = schema_->find_table(t.text);
      if (!table) fail_at(t.pos, "unknown table '" + t.text + "'");
    }
    expect_char(']', "after the table name");

    ScanArgs args;
    args.table = t.text;
    std::vector<std::string_view> allowed = {"Predicate", "Distinct", "Output"};
    for (;;) {
      Word w = read_word(clause_expectation(allowed));
      size_t idx = expect_keyword_oneof(w, allowed);
      std::string_view clause = allowed[idx];
      if (clause == "Predicate") {
        args.predicate = parse_predicate_clause(RefContext::LeafPredicate, table);
        allowed = {"Distinct", "Output"};
      } else if (clause == "Distinct") {
        args.distinct = parse_bool_clause();
        allowed = {"Output"};
      } else {
        args.outputs = parse_output_list(RefContext::LeafOutput, table, false);
        break;
      }
    }
    Plan plan;
    plan.op = OpKind::Scan;
    plan.args = std::move(args);
    return plan;
  }

  static std::string clause_expectation(const std::vector<std::string_view>& kws) {
    std::string msg;
    for (size_t i = 0; i < kws.size(); ++i) {
      if (i) msg += kws.size() == 2 && i == 1 ? " or " : ", ";
      msg += "'" + std::string(kws[i]) + "'";
    }
    return msg;
  }

  Plan parse_op_clause(std::vector<Plan> children) {
    const bool binary = children.size() == 2;
    std::vector<std::string_view> unary_ops = {"Aggregate", "Filter", "Sort", "TopSort"};
    std::vector<std::string_view> binary_ops = {"Join", "Except", "Intersect", "Union"};
    Word w = read_word("an operator name");
    // A known operator of the wrong arity is an arity violation, not an
    // unknown keyword.
    if (!w.open) {
      if (auto op = op_from_name(w.text)) {
        int arity = op_arity(*op);
        if (arity != static_cast<int>(children.size())) {
          fail_at(w.pos, "operator '" + w.text + "' takes " + std::to_string(arity) +
                             " input" + (arity == 1 ? "" : "s") + ", " +
                             std::to_string(children.size()) + " given");
        }
      }
    }
    const auto& ops = binary ? binary_ops : unary_ops;
    size_t idx = expect_keyword_oneof(w, ops);
    Plan plan;
    plan.children = std::move(children);
    if (binary) {
      switch (idx) {
        case 0: {  // Join
          plan.op = OpKind::Join;
          JoinArgs args;
          Word p = read_word("'Predicate'");
          expect_keyword(p, "Predicate");
          args.predicate = parse_predicate_clause(RefContext::Inner, nullptr);
          Word o = read_word("'Output'");
          expect_keyword(o, "Output");
          args.outputs = parse_output_list(RefContext::Inner, nullptr, false);
          plan.args = std::move(args);
          break;
        }
        default: {  // Except / Intersect / Union
          plan.op = idx == 1 ? OpKind::Except : (idx == 2 ? OpKind::Intersect : OpKind::Union);
          SetOpArgs args;
          Word o = read_word("'Output'");
          expect_keyword(o, "Output");
          args.outputs = parse_output_list(RefContext::Inner, nullptr, false);
          plan.args = std::move(args);
          break;
        }
      }
      return plan;
    }
    switch (idx) {
      case 0: {  // Aggregate
        plan.op = OpKind::Aggregate;
        AggregateArgs args;
        std::vector<std::string_view> allowed = {"GroupBy", "Output"};
        Word k = read_word(clause_expectation(allowed));
        size_t ci = expect_keyword_oneof(k, allowed);
        if (ci == 0) {
          args.group_by = parse_ref_list(RefContext::Inner);
          Word o = read_word("'Output'");
          expect_keyword(o, "Output");
        }
        args.outputs = parse_output_list(RefContext::Inner, nullptr, true);
        plan.args = std::move(args);
        break;
      }
      case 1: {  // Filter
        plan.op = OpKind::Filter;
        FilterArgs args;
        Word p = read_word("'Predicate'");
        expect_keyword(p, "Predicate");
        args.predicate = parse_predicate_clause(RefContext::Inner, nullptr);
        std::vector<std::string_view> allowed = {"Distinct", "Output"};
        Word k = read_word(clause_expectation(allowed));
        size_t ci = expect_keyword_oneof(k, allowed);
        if (ci == 0) {
          args.distinct = parse_bool_clause();
          Word o = read_word("'Output'");
          expect_keyword(o, "Output");
        }
        args.outputs = parse_output_list(RefContext::Inner, nullptr, false);
        plan.args = std::move(args);
        break;
      }
      case 2: {  // Sort
        plan.op = OpKind::Sort;
        SortArgs args;
        Word k = read_word("'OrderBy'");
        expect_keyword(k, "OrderBy");
        args.keys = parse_sort_keys();
        Word o = read_word("'Output'");
        expect_keyword(o, "Output");
        args.outputs = parse_output_list(RefContext::Inner, nullptr, false);
        plan.args = std::move(args);
        break;
      }
      default: {  // TopSort
        plan.op = OpKind::TopSort;
        TopSortArgs args;
        Word r = read_word("'Rows'");
        expect_keyword(r, "Rows");
        expect_char('[', "to open the row count");
        NumberToken n = parse_number();
        if (n.open) {
          // "0" may still grow into a positive count; a real or negative
          // number cannot.
          if (n.is_real || (n.value.is_integer() && n.value.as_integer() < 0)) {
            fail_at(n.pos, "row count must be a positive integer");
          }
          if (n.value.is_integer() && n.value.as_integer() == 0) end_of_input(n.pos);
        } else if (n.is_real || n.value.as_integer() < 1) {
          fail_at(n.pos, "row count must be a positive integer");
        }
        args.rows = n.value.as_integer();
        expect_char(']', "to close the row count");
        Word k = read_word("'OrderBy'");
        expect_keyword(k, "OrderBy");
        args.keys = parse_sort_keys();
        Word o = read_word("'Output'");
        expect_keyword(o, "Output");
        args.outputs = parse_output_list(RefContext::Inner, nullptr, false);
        plan.args = std::move(args);
        break;
      }
    }
    return plan;
  }

  Plan parse_plan() {
    skip_ws();
    if (at_end()) end_of_input(pos_);
    if (peek() == '[') {
      ++pos_;
      std::vector<Plan> children;
      children.push_back(parse_plan());
      for (;;) {
        skip_ws();
        if (at_end()) end_of_input(pos_);
        if (peek() == ',') {
          if (children.size() == 2) {
            fail_at(pos_, "no operator takes more than two inputs");
          }
          ++pos_;
          children.push_back(parse_plan());
        } else if (peek() == ']') {
          ++pos_;
          break;
        } else {
          fail_at(pos_, "expected ',' or ']' in the child plan list");
        }
      }
      Word into = read_word("'Into:'");
      expect_keyword(into, "Into");
      if (at_end()) end_of_input(pos_);
      if (peek() != ':') fail_at(pos_, "expected ':' after 'Into'");
      ++pos_;
      return parse_op_clause(std::move(children));
    }
    Word w = read_word("a plan ('[' or 'Scan')");
    expect_keyword(w, "Scan");
    return parse_scan_leaf();
  }
};

struct RunOutcome {
  std::optional<Plan> plan;
  ParseFail failure;
};

RunOutcome run_parser(std::string_view text, const Schema* schema) {
  Parser parser(text, schema);
  RunOutcome out;
  try {
    out.plan = parser.parse_complete();
  } catch (ParseFail& f) {
    out.failure = std::move(f);
  }
  return out;
}

// --- serialization ---------------------------------------------------------

void write_operand(std::string& out, const Operand& op);

std::string literal_text(const Value& v) {
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

int predicate_precedence(const Predicate& p) {
  if (const auto* combo = std::get_if<BoolCombo>(&p.node)) {
    switch (combo->op) {
      case BoolOp::Or: return 1;
      case BoolOp::And: return 2;
      case BoolOp::Not: return 3;
    }
  }
  return 4;
}

void write_predicate(std::string& out, const Predicate& p, int parent_prec) {
  int prec = predicate_precedence(p);
  if (const auto* combo = std::get_if<BoolCombo>(&p.node)) {
    // Parenthesize when binding would change; equal precedence keeps the
    // tree shape across a round trip.
    bool parens = combo->op == BoolOp::Not ? prec < parent_prec : prec <= parent_prec;
    if (parens) out += "(";
    if (combo->op == BoolOp::Not) {
      out += "NOT ";
      write_predicate(out, combo->children[0], prec);
    } else {
      const char* sep = combo->op == BoolOp::And ? " AND " : " OR ";
      for (size_t i = 0; i < combo->children.size(); ++i) {
        if (i) out += sep;
        write_predicate(out, combo->children[i], prec);
      }
    }
    if (parens) out += ")";
    return;
  }
  if (const auto* cmp = std::get_if<Comparison>(&p.node)) {
    write_operand(out, cmp->lhs);
    out += " ";
    out += compare_op_token(cmp->op);
    out += " ";
    write_operand(out, cmp->rhs);
    return;
  }
  if (const auto* nc = std::get_if<NullCheck>(&p.node)) {
    write_operand(out, nc->operand);
    out += nc->negated ? " IS NOT NULL" : " IS NULL";
    return;
  }
  const auto& in = std::get<InList>(p.node);
  write_operand(out, in.operand);
  out += " IN (";
  for (size_t i = 0; i < in.items.size(); ++i) {
    if (i) out += ", ";
    out += literal_text(in.items[i].value);
  }
  out += ")";
}

void write_operand(std::string& out, const Operand& op) {
  if (const auto* ref = std::get_if<ColumnRef>(&op)) {
    out += ref->full_name();
  } else {
    out += literal_text(std::get<Literal>(op).value);
  }
}

void write_output_expr(std::string& out, const OutputExpr& e) {
  if (const auto* ref = std::get_if<ColumnRef>(&e.expr)) {
    out += ref->full_name();
  } else {
    const auto& agg = std::get<AggApply>(e.expr);
    out += agg_func_name(agg.func);
    out += "(";
    out += agg.countstar ? "*" : agg.operand.full_name();
    out += ")";
  }
  if (e.alias) {
    out += " AS ";
    out += *e.alias;
  }
}

void write_output_list(std::string& out, const std::vector<OutputExpr>& outs) {
  out += "Output [";
  for (size_t i = 0; i < outs.size(); ++i) {
    if (i) out += ", ";
    write_output_expr(out, outs[i]);
  }
  out += "]";
}

void write_sort_keys(std::string& out, const std::vector<SortKey>& keys) {
  out += "OrderBy [";
  for (size_t i = 0; i < keys.size(); ++i) {
    if (i) out += ", ";
    out += keys[i].ref.full_name();
    out += keys[i].descending ? " DESC" : " ASC";
  }
  out += "]";
}

std::string predicate_text(const Predicate& p) {
  std::string out;
  write_predicate(out, p, 0);
  return out;
}

void write_plan(std::string& out, const Plan& plan) {
  if (plan.op == OpKind::Scan) {
    const auto& args = std::get<ScanArgs>(plan.args);
    out += "Scan Table [";
    out += args.table;
    out += "]";
    if (args.predicate) {
      out += " Predicate [";
      out += predicate_text(*args.predicate);
      out += "]";
    }
    if (args.distinct) out += " Distinct [true]";
    out += " ";
    write_output_list(out, args.outputs);
    return;
  }
  out += "[ ";
  for (size_t i = 0; i < plan.children.size(); ++i) {
    if (i) out += ", ";
    write_plan(out, plan.children[i]);
  }
  out += " ] Into: ";
  out += op_name(plan.op);
  switch (plan.op) {
    case OpKind::Aggregate: {
      const auto& args = std::get<AggregateArgs>(plan.args);
      if (!args.group_by.empty()) {
        out += " GroupBy [";
        for (size_t i = 0; i < args.group_by.size(); ++i) {
          if (i) out += ", ";
          out += args.group_by[i].full_name();
        }
        out += "]";
      }
      out += " ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::Filter: {
      const auto& args = std::get<FilterArgs>(plan.args);
      out += " Predicate [";
      out += predicate_text(args.predicate);
      out += "]";
      if (args.distinct) out += " Distinct [true]";
      out += " ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::Join: {
      const auto& args = std::get<JoinArgs>(plan.args);
      out += " Predicate [";
      out += predicate_text(args.predicate);
      out += "] ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::Except:
    case OpKind::Intersect:
    case OpKind::Union: {
      const auto& args = std::get<SetOpArgs>(plan.args);
      out += " ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::Sort: {
      const auto& args = std::get<SortArgs>(plan.args);
      out += " ";
      write_sort_keys(out, args.keys);
      out += " ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::TopSort: {
      const auto& args = std::get<TopSortArgs>(plan.args);
      out += " Rows [";
      out += std::to_string(args.rows);
      out += "] ";
      write_sort_keys(out, args.keys);
      out += " ";
      write_output_list(out, args.outputs);
      break;
    }
    case OpKind::Scan:
      break;
  }
}

}  // namespace

ParseResult parse(std::string_view text) {
  RunOutcome out = run_parser(text, nullptr);
  ParseResult result;
  if (out.plan) {
    result.plan = std::move(out.plan);
    return result;
  }
  Diagnostic d;
  d.severity = Severity::Error;
  d.begin = out.failure.pos;
  d.end = std::min(out.failure.pos + 1, text.size());
  d.message = out.failure.reason;
  result.diagnostics.push_back(std::move(d));
  return result;
}

std::string serialize(const Plan& plan) {
  std::string out;
  write_plan(out, plan);
  return out;
}

std::string serialize_predicate(const Predicate& pred) { return predicate_text(pred); }

PrefixVerdict check_prefix(std::string_view prefix) {
  RunOutcome out = run_parser(prefix, nullptr);
  if (out.plan) return {PrefixState::Complete, 0, ""};
  if (out.failure.incomplete) return {PrefixState::ValidPrefix, 0, ""};
  return {PrefixState::Invalid, out.failure.pos, out.failure.reason};
}

PrefixVerdict check_prefix_with_schema(std::string_view prefix, const Schema& schema) {
  RunOutcome out = run_parser(prefix, &schema);
  if (out.plan) return {PrefixState::Complete, 0, ""};
  if (out.failure.incomplete) return {PrefixState::ValidPrefix, 0, ""};
  return {PrefixState::Invalid, out.failure.pos, out.failure.reason};
}

}  // namespace qpl
