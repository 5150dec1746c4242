#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qpl/value.hpp"

using namespace qpl;

TEST_CASE("dtype names round trip and aliases map") {
  CHECK(*dtype_from_name("integer") == Dtype::Integer);
  CHECK(*dtype_from_name("number") == Dtype::Real);
  CHECK(*dtype_from_name("others") == Dtype::Text);
  CHECK(*dtype_from_name("time") == Dtype::Date);
  CHECK(*dtype_from_name("Boolean") == Dtype::Boolean);
  CHECK(!dtype_from_name("blob").has_value());
  for (Dtype t : {Dtype::Integer, Dtype::Real, Dtype::Text, Dtype::Boolean, Dtype::Date}) {
    CHECK(*dtype_from_name(dtype_name(t)) == t);
  }
}

TEST_CASE("comparison families") {
  CHECK(dtypes_comparable(Dtype::Integer, Dtype::Real));
  CHECK(dtypes_comparable(Dtype::Integer, Dtype::Boolean));
  CHECK(dtypes_comparable(Dtype::Text, Dtype::Date));
  CHECK(!dtypes_comparable(Dtype::Integer, Dtype::Text));
  CHECK(!dtypes_comparable(Dtype::Date, Dtype::Real));
}

TEST_CASE("compare_values is three-valued") {
  CHECK(!compare_values(Value::null(), Value::integer(1)).has_value());
  CHECK(!compare_values(Value::null(), Value::null()).has_value());
  CHECK(*compare_values(Value::integer(1), Value::integer(2)) < 0);
  CHECK(*compare_values(Value::integer(2), Value::real(2.0)) == 0);
  CHECK(*compare_values(Value::boolean(true), Value::integer(1)) == 0);
  CHECK(*compare_values(Value::text("a"), Value::text("b")) < 0);
  CHECK(*compare_values(Value::text("Z"), Value::text("a")) < 0);  // bytewise
}

TEST_CASE("order_values groups null with null and 1 with 1.0") {
  CHECK(order_values(Value::null(), Value::null()) == 0);
  CHECK(order_values(Value::null(), Value::integer(-100)) < 0);
  CHECK(order_values(Value::integer(1), Value::real(1.0)) == 0);
  CHECK(values_grouping_equal(Value::boolean(false), Value::integer(0)));
  CHECK(!values_grouping_equal(Value::integer(1), Value::integer(2)));
}

TEST_CASE("format_real renders round-trip text") {
  CHECK(format_real(17.5) == "17.5");
  CHECK(format_real(2.0) == "2.0");
  CHECK(format_real(-0.25) == "-0.25");
  double v = 0.1 + 0.2;
  CHECK(std::stod(format_real(v)) == v);
}

TEST_CASE("parse_cell honours dtype and null convention") {
  CHECK(parse_cell("", false, Dtype::Integer)->is_null());
  CHECK(parse_cell("", true, Dtype::Text)->as_text() == "");
  CHECK(parse_cell("42", false, Dtype::Integer)->as_integer() == 42);
  CHECK(parse_cell("-7", false, Dtype::Integer)->as_integer() == -7);
  CHECK(!parse_cell("4.5", false, Dtype::Integer).has_value());
  CHECK(parse_cell("4.5", false, Dtype::Real)->as_real() == 4.5);
  CHECK(!parse_cell("abc", false, Dtype::Real).has_value());
  CHECK(parse_cell("true", false, Dtype::Boolean)->as_boolean());
  CHECK(parse_cell("TRUE", false, Dtype::Boolean)->as_boolean());
  CHECK(parse_cell("0", false, Dtype::Boolean)->as_boolean() == false);
  CHECK(!parse_cell("yes", false, Dtype::Boolean).has_value());
  CHECK(parse_cell("2020-01-05", false, Dtype::Date)->as_text() == "2020-01-05");
}
