#include "qpl/value.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>

namespace qpl {

const char* dtype_name(Dtype t) {
  switch (t) {
    case Dtype::Integer: return "integer";
    case Dtype::Real: return "real";
    case Dtype::Text: return "text";
    case Dtype::Boolean: return "boolean";
    case Dtype::Date: return "date";
  }
  return "?";
}

std::optional<Dtype> dtype_from_name(const std::string& name) {
  std::string s;
  s.reserve(name.size());
  for (char c : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "integer" || s == "int") return Dtype::Integer;
  if (s == "real" || s == "number" || s == "float") return Dtype::Real;
  if (s == "text" || s == "string" || s == "varchar" || s == "others") return Dtype::Text;
  if (s == "boolean" || s == "bool") return Dtype::Boolean;
  if (s == "date" || s == "time" || s == "datetime") return Dtype::Date;
  return std::nullopt;
}

bool dtype_is_numeric(Dtype t) {
  return t == Dtype::Integer || t == Dtype::Real || t == Dtype::Boolean;
}

bool dtype_is_textual(Dtype t) { return t == Dtype::Text || t == Dtype::Date; }

bool dtypes_comparable(Dtype a, Dtype b) {
  return (dtype_is_numeric(a) && dtype_is_numeric(b)) ||
         (dtype_is_textual(a) && dtype_is_textual(b));
}

double Value::numeric() const {
  if (is_integer()) return static_cast<double>(as_integer());
  if (is_real()) return as_real();
  if (is_boolean()) return as_boolean() ? 1.0 : 0.0;
  return 0.0;
}

std::optional<int> compare_values(const Value& a, const Value& b) {
  if (a.is_null() || b.is_null()) return std::nullopt;
  if (a.is_numeric() && b.is_numeric()) {
    // Exact compare when neither side is a real.
    if (!a.is_real() && !b.is_real()) {
      int64_t x = a.is_boolean() ? (a.as_boolean() ? 1 : 0) : a.as_integer();
      int64_t y = b.is_boolean() ? (b.as_boolean() ? 1 : 0) : b.as_integer();
      return x < y ? -1 : (x > y ? 1 : 0);
    }
    double x = a.numeric();
    double y = b.numeric();
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  if (a.is_text() && b.is_text()) {
    int c = a.as_text().compare(b.as_text());
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  // Mixed families never reach here post-validation; order them by kind so
  // the function stays total.
  return a.is_text() ? 1 : -1;
}

int order_values(const Value& a, const Value& b) {
  bool an = a.is_null(), bn = b.is_null();
  if (an || bn) {
    if (an && bn) return 0;
    return an ? -1 : 1;
  }
  bool at = a.is_text(), bt = b.is_text();
  if (at != bt) return at ? 1 : -1;  // numerics before text
  return *compare_values(a, b);
}

bool values_grouping_equal(const Value& a, const Value& b) {
  return order_values(a, b) == 0;
}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  // Keep an explicit decimal point so the text re-parses as a real.
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string value_to_display(const Value& v) {
  if (v.is_null()) return "";
  if (v.is_integer()) return std::to_string(v.as_integer());
  if (v.is_real()) return format_real(v.as_real());
  if (v.is_boolean()) return v.as_boolean() ? "true" : "false";
  return v.as_text();
}

namespace {

bool parse_full_int(const std::string& s, int64_t& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_full_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* cs = s.c_str();
  char* end = nullptr;
  out = std::strtod(cs, &end);
  return end == cs + s.size() && std::isfinite(out);
}

}  // namespace

std::optional<Value> parse_cell(const std::string& raw, bool quoted, Dtype dtype) {
  if (raw.empty() && !quoted) return Value::null();
  switch (dtype) {
    case Dtype::Integer: {
      int64_t v;
      if (!parse_full_int(raw, v)) return std::nullopt;
      return Value::integer(v);
    }
    case Dtype::Real: {
      double v;
      if (!parse_full_real(raw, v)) return std::nullopt;
      return Value::real(v);
    }
    case Dtype::Boolean: {
      std::string s;
      for (char c : raw) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      if (s == "true" || s == "1") return Value::boolean(true);
      if (s == "false" || s == "0") return Value::boolean(false);
      return std::nullopt;
    }
    case Dtype::Text:
    case Dtype::Date:
      return Value::text(raw);
  }
  return std::nullopt;
}

}  // namespace qpl
