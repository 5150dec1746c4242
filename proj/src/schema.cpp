#include "qpl/schema.hpp"

#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qpl/csv.hpp"

namespace qpl {

std::string fold_case(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool iprefix(const std::string& prefix, const std::string& full) {
  if (prefix.size() > full.size()) return false;
  for (size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(prefix[i])) !=
        std::tolower(static_cast<unsigned char>(full[i]))) {
      return false;
    }
  }
  return true;
}

const Column* Table::find_column(const std::string& name) const {
  for (const Column& c : columns) {
    if (iequals(c.name, name)) return &c;
  }
  return nullptr;
}

const Table* Schema::find_table(const std::string& name) const {
  for (const Table& t : tables) {
    if (iequals(t.name, name)) return &t;
  }
  return nullptr;
}

namespace {

using nlohmann::json;

Dtype parse_dtype(const std::string& s, const std::string& context) {
  auto t = dtype_from_name(s);
  if (!t) throw SchemaError("unknown column type '" + s + "' for " + context);
  return *t;
}

void check_schema_invariants(const Schema& schema) {
  if (schema.tables.empty()) throw SchemaError("schema has zero tables");
  std::set<std::string> table_names;
  for (const Table& t : schema.tables) {
    if (!table_names.insert(fold_case(t.name)).second) {
      throw SchemaError("duplicate table name '" + t.name + "'");
    }
    if (t.columns.empty()) throw SchemaError("table '" + t.name + "' has no columns");
    std::set<std::string> col_names;
    for (const Column& c : t.columns) {
      if (!col_names.insert(fold_case(c.name)).second) {
        throw SchemaError("duplicate column name '" + c.name + "' in table '" + t.name + "'");
      }
    }
    for (const std::string& pk : t.primary_key) {
      if (!t.find_column(pk)) {
        throw SchemaError("primary key column '" + pk + "' not found in table '" + t.name + "'");
      }
    }
  }
  for (const Table& t : schema.tables) {
    for (const ForeignKey& fk : t.foreign_keys) {
      if (!t.find_column(fk.local_column)) {
        throw SchemaError("foreign key local column '" + fk.local_column +
                          "' not found in table '" + t.name + "'");
      }
      const Table* remote = schema.find_table(fk.remote_table);
      if (!remote) {
        throw SchemaError("foreign key of '" + t.name + "' references unknown table '" +
                          fk.remote_table + "'");
      }
      if (!remote->find_column(fk.remote_column)) {
        throw SchemaError("foreign key of '" + t.name + "' references unknown column '" +
                          fk.remote_table + "." + fk.remote_column + "'");
      }
    }
  }
}

}  // namespace

Schema load_schema(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("db_id") || !doc.contains("tables")) {
    throw SchemaError("schema document must have db_id and tables fields");
  }
  Schema schema;
  try {
    schema.db_id = doc.at("db_id").get<std::string>();
    for (const json& jt : doc.at("tables")) {
      Table table;
      table.name = jt.at("name").get<std::string>();
      for (const json& jc : jt.at("columns")) {
        Column col;
        col.name = jc.at("name").get<std::string>();
        col.dtype = parse_dtype(jc.at("type").get<std::string>(),
                                table.name + "." + col.name);
        table.columns.push_back(std::move(col));
      }
      if (jt.contains("primary_key")) {
        for (const json& jpk : jt.at("primary_key")) {
          table.primary_key.push_back(jpk.get<std::string>());
        }
      }
      if (jt.contains("foreign_keys")) {
        for (const json& jfk : jt.at("foreign_keys")) {
          if (!jfk.is_array() || jfk.size() != 3) {
            throw SchemaError("foreign key of '" + table.name +
                              "' must be [local_column, remote_table, remote_column]");
          }
          table.foreign_keys.push_back(ForeignKey{jfk[0].get<std::string>(),
                                                  jfk[1].get<std::string>(),
                                                  jfk[2].get<std::string>()});
        }
      }
      schema.tables.push_back(std::move(table));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema document: ") + e.what());
  }
  check_schema_invariants(schema);
  return schema;
}

Schema load_schema_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open schema file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_schema(buf.str());
}

ColumnLookup resolve_column(const Schema& schema, const std::string& qualified) {
  ColumnLookup out;
  size_t dot = qualified.find('.');
  if (dot == std::string::npos) {
    out.error = "column reference '" + qualified + "' is not qualified (expected table.column)";
    return out;
  }
  if (qualified.find('.', dot + 1) != std::string::npos) {
    out.error = "malformed column reference '" + qualified + "'";
    return out;
  }
  std::string table_name = qualified.substr(0, dot);
  std::string column_name = qualified.substr(dot + 1);
  const Table* table = schema.find_table(table_name);
  if (!table) {
    out.error = "unknown table '" + table_name + "'";
    return out;
  }
  const Column* column = table->find_column(column_name);
  if (!column) {
    out.error = "unknown column '" + column_name + "' in table '" + table->name + "'";
    return out;
  }
  out.table = table;
  out.column = column;
  return out;
}

const TableData& Database::table_data(const std::string& table_name) const {
  auto it = contents.find(fold_case(table_name));
  if (it == contents.end()) {
    throw SchemaError("no data loaded for table '" + table_name + "'");
  }
  return it->second;
}

Database load_database(const Schema& schema, const std::string& data_dir) {
  Database db;
  db.schema = schema;
  for (const Table& table : schema.tables) {
    std::string path = data_dir + "/" + table.name + ".csv";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("missing data file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    std::vector<csv::Record> records;
    try {
      records = csv::read(buf.str());
    } catch (const std::exception& e) {
      throw SchemaError(std::string("bad csv in '") + path + "': " + e.what());
    }
    if (records.empty()) {
      throw SchemaError("data file '" + path + "' is missing its header row");
    }
    const csv::Record& header = records[0];
    if (header.size() != table.columns.size()) {
      throw SchemaError("header of '" + path + "' has " + std::to_string(header.size()) +
                        " columns, schema declares " + std::to_string(table.columns.size()));
    }
    for (size_t i = 0; i < header.size(); ++i) {
      if (!iequals(header[i].text, table.columns[i].name)) {
        throw SchemaError("header of '" + path + "' column " + std::to_string(i + 1) +
                          " is '" + header[i].text + "', schema declares '" +
                          table.columns[i].name + "'");
      }
    }
    TableData data;
    for (size_t r = 1; r < records.size(); ++r) {
      const csv::Record& rec = records[r];
      if (rec.size() != table.columns.size()) {
        throw SchemaError("row " + std::to_string(r) + " of '" + path + "' has " +
                          std::to_string(rec.size()) + " fields, expected " +
                          std::to_string(table.columns.size()));
      }
      std::vector<Value> row;
      row.reserve(rec.size());
      for (size_t i = 0; i < rec.size(); ++i) {
        auto cell = parse_cell(rec[i].text, rec[i].quoted, table.columns[i].dtype);
        if (!cell) {
          throw SchemaError("row " + std::to_string(r) + " of '" + path + "': cell '" +
                            rec[i].text + "' is not a valid " +
                            dtype_name(table.columns[i].dtype) + " for column '" +
                            table.columns[i].name + "'");
        }
        row.push_back(std::move(*cell));
      }
      data.rows.push_back(std::move(row));
    }
    db.contents.emplace(fold_case(table.name), std::move(data));
  }
  return db;
}

Database make_database(const Schema& schema, std::map<std::string, TableData> contents) {
  Database db;
  db.schema = schema;
  for (auto& [name, data] : contents) {
    db.contents.emplace(fold_case(name), std::move(data));
  }
  for (const Table& t : schema.tables) {
    auto it = db.contents.find(fold_case(t.name));
    if (it == db.contents.end()) {
      db.contents.emplace(fold_case(t.name), TableData{});
      continue;
    }
    for (const auto& row : it->second.rows) {
      if (row.size() != t.columns.size()) {
        throw SchemaError("relation for table '" + t.name + "' has wrong arity");
      }
    }
  }
  return db;
}

}  // namespace qpl
