#include "qpl/csv.hpp"

#include <stdexcept>

namespace qpl::csv {

std::vector<Record> read(std::string_view data) {
  std::vector<Record> records;
  Record current;
  Field field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    current.push_back(std::move(field));
    field = Field{};
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current = Record{};
  };

  size_t i = 0;
  const size_t n = data.size();
  while (i < n) {
    char c = data[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < n && data[i + 1] == '"') {
          field.text.push_back('"');
          i += 2;
        } else {
          in_quotes = false;
          ++i;
        }
      } else {
        field.text.push_back(c);
        ++i;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !field.text.empty()) {
          throw std::runtime_error("csv: quote inside unquoted field");
        }
        in_quotes = true;
        field.quoted = true;
        field_started = true;
        ++i;
        break;
      case ',':
        end_field();
        ++i;
        break;
      case '\r':
        if (i + 1 < n && data[i + 1] == '\n') {
          end_record();
          i += 2;
        } else {
          field.text.push_back(c);
          field_started = true;
          ++i;
        }
        break;
      case '\n':
        end_record();
        ++i;
        break;
      default:
        field.text.push_back(c);
        field_started = true;
        ++i;
        break;
    }
  }
  if (in_quotes) throw std::runtime_error("csv: unterminated quoted field");
  // Final record without trailing newline.
  if (field_started || field.quoted || !current.empty()) end_record();
  return records;
}

std::string escape_field(std::string_view field) {
  bool needs_quotes = false;
  for (char c : field) {
    if (c == ',' || c == '"' || c == '\n' || c == '\r') {
      needs_quotes = true;
      break;
    }
  }
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string write_record(const std::vector<std::string>& fields) {
  std::string out;
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape_field(fields[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace qpl::csv
