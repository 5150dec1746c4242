#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpl/value.hpp"

namespace qpl {

// Raised by the schema and data loaders.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct Column {
  std::string name;
  Dtype dtype = Dtype::Text;
};

struct ForeignKey {
  std::string local_column;
  std::string remote_table;
  std::string remote_column;
};

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  // Case-insensitive column lookup; spelling is preserved as declared.
  const Column* find_column(const std::string& name) const;
};

struct Schema {
  std::string db_id;
  std::vector<Table> tables;

  const Table* find_table(const std::string& name) const;
};

// ASCII case folding used for all identifier matching.
std::string fold_case(const std::string& s);
bool iequals(const std::string& a, const std::string& b);
bool iprefix(const std::string& prefix, const std::string& full);

// Loads a schema from its JSON document and checks all structural
// invariants (non-empty, unique names, resolvable keys).
Schema load_schema(const std::string& json_text);
Schema load_schema_file(const std::string& path);

struct ColumnLookup {
  const Table* table = nullptr;
  const Column* column = nullptr;
  std::string error;  // empty on success

  bool ok() const { return table != nullptr && column != nullptr; }
};

// Resolves a fully qualified "table.column" name. Unqualified names are an
// error: all schema items in QPL are fully qualified.
ColumnLookup resolve_column(const Schema& schema, const std::string& qualified);

// Table contents: one row of cells per tuple, in schema column order.
struct TableData {
  std::vector<std::vector<Value>> rows;
};

struct Database {
  Schema schema;
  std::map<std::string, TableData> contents;  // keyed by folded table name

  const TableData& table_data(const std::string& table_name) const;
};

// Loads one CSV file per schema table from data_dir (<table>.csv, header row
// first, empty field = null). Cells are checked against declared dtypes.
Database load_database(const Schema& schema, const std::string& data_dir);

// In-memory variant used by tests and the generator.
Database make_database(const Schema& schema,
                       std::map<std::string, TableData> contents);

}  // namespace qpl
