#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

namespace qpl {

// Column data types. Spider's "number" maps to Real, "others" to Text,
// "time" to Date.
enum class Dtype { Integer, Real, Text, Boolean, Date };

const char* dtype_name(Dtype t);
std::optional<Dtype> dtype_from_name(const std::string& name);

// Numeric kinds (Integer, Real, Boolean) compare with each other; textual
// kinds (Text, Date) compare with each other.
bool dtype_is_numeric(Dtype t);
bool dtype_is_textual(Dtype t);
bool dtypes_comparable(Dtype a, Dtype b);

// A single cell: null or a typed payload. Date values carry a text payload;
// the distinction lives in the column's Dtype.
class Value {
 public:
  Value() = default;

  static Value null() { return Value(); }
  static Value integer(int64_t v) { return Value(Payload(v)); }
  static Value real(double v) { return Value(Payload(v)); }
  static Value boolean(bool v) { return Value(Payload(v)); }
  static Value text(std::string v) { return Value(Payload(std::move(v))); }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_integer() const { return std::holds_alternative<int64_t>(v_); }
  bool is_real() const { return std::holds_alternative<double>(v_); }
  bool is_boolean() const { return std::holds_alternative<bool>(v_); }
  bool is_text() const { return std::holds_alternative<std::string>(v_); }
  bool is_numeric() const { return is_integer() || is_real() || is_boolean(); }

  int64_t as_integer() const { return std::get<int64_t>(v_); }
  double as_real() const { return std::get<double>(v_); }
  bool as_boolean() const { return std::get<bool>(v_); }
  const std::string& as_text() const { return std::get<std::string>(v_); }

  // Numeric payload widened to double (booleans count as 0/1).
  double numeric() const;

  bool operator==(const Value& other) const = default;

 private:
  using Payload = std::variant<std::monostate, int64_t, double, bool, std::string>;
  explicit Value(Payload p) : v_(std::move(p)) {}
  Payload v_;
};

// Three-valued comparison: nullopt when either side is null, otherwise
// negative/zero/positive. Numerics compare numerically (exact when both are
// integral), text compares bytewise.
std::optional<int> compare_values(const Value& a, const Value& b);

// Total order used for grouping, DISTINCT and set operations: null sorts
// first and equals null, numerics before text. Deterministic for any pair.
int order_values(const Value& a, const Value& b);

// Equality under grouping semantics (null = null, 1 = 1.0).
bool values_grouping_equal(const Value& a, const Value& b);

// Shortest round-trip decimal rendering for reals; used by the serializer,
// the SQL emitter and the CSV/JSON writers so all outputs agree.
std::string format_real(double v);

// Renders a value for display (null as empty string).
std::string value_to_display(const Value& v);

// Parses a CSV cell per the declared dtype. Returns nullopt on failure.
// `quoted` distinguishes an empty text field ("" -> empty string) from a
// null field (bare empty -> null).
std::optional<Value> parse_cell(const std::string& raw, bool quoted, Dtype dtype);

}  // namespace qpl
