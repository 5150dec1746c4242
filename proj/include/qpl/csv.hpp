#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qpl::csv {

struct Field {
  std::string text;
  bool quoted = false;

  bool operator==(const Field&) const = default;
};

using Record = std::vector<Field>;

// RFC 4180 reader: comma separated, optional CRLF line endings, double-quote
// escaping inside quoted fields. A trailing newline does not produce an empty
// record. Throws std::runtime_error on malformed quoting.
std::vector<Record> read(std::string_view data);

// Quotes a field when it contains a comma, quote or line break.
std::string escape_field(std::string_view field);

std::string write_record(const std::vector<std::string>& fields);

}  // namespace qpl::csv
