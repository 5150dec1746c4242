#include "qpl/sql_backend.hpp"

#include <sqlite3.h>

#include "qpl/compiler.hpp"

namespace qpl {

std::vector<std::string> database_to_sql(const Database& db) {
  std::vector<std::string> stmts;
  for (const Table& table : db.schema.tables) {
    stmts.push_back("DROP TABLE IF EXISTS " + sql_quote(table.name));
    std::string create = "CREATE TABLE " + sql_quote(table.name) + " (";
    for (size_t i = 0; i < table.columns.size(); ++i) {
      if (i) create += ", ";
      create += sql_quote(table.columns[i].name);
      switch (table.columns[i].dtype) {
        case Dtype::Integer:
        case Dtype::Boolean:
          create += " INTEGER";
          break;
        case Dtype::Real:
          create += " REAL";
          break;
        case Dtype::Text:
        case Dtype::Date:
          create += " TEXT";
          break;
      }
    }
    create += ")";
    stmts.push_back(std::move(create));

    const TableData& data = db.table_data(table.name);
    if (data.rows.empty()) continue;
    std::string insert = "INSERT INTO " + sql_quote(table.name) + " VALUES ";
    for (size_t r = 0; r < data.rows.size(); ++r) {
      if (r) insert += ", ";
      insert += "(";
      for (size_t c = 0; c < data.rows[r].size(); ++c) {
        if (c) insert += ", ";
        insert += sql_literal(data.rows[r][c]);
      }
      insert += ")";
    }
    stmts.push_back(std::move(insert));
  }
  return stmts;
}

SqliteBackend::SqliteBackend() {
  if (sqlite3_open(":memory:", &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    throw BackendError("cannot open in-memory sqlite database: " + msg);
  }
  execute("PRAGMA case_sensitive_like = ON");
}

SqliteBackend::SqliteBackend(const Database& db) : SqliteBackend() { load(db); }

SqliteBackend::~SqliteBackend() {
  if (db_) sqlite3_close(db_);
}

void SqliteBackend::load(const Database& db) {
  for (const std::string& stmt : database_to_sql(db)) execute(stmt);
}

BackendResult SqliteBackend::execute(const std::string& sql) {
  sqlite3_stmt* stmt = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_, sql.c_str(), -1, &stmt, &tail);
  if (rc != SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db_);
    if (stmt) sqlite3_finalize(stmt);
    throw BackendError("sqlite error: " + msg + " in: " + sql);
  }
  BackendResult result;
  int ncols = sqlite3_column_count(stmt);
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt, i);
    result.columns.push_back(name ? name : "");
  }
  for (;;) {
    rc = sqlite3_step(stmt);
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) {
      std::string msg = sqlite3_errmsg(db_);
      sqlite3_finalize(stmt);
      throw BackendError("sqlite error: " + msg + " in: " + sql);
    }
    std::vector<Value> row;
    row.reserve(static_cast<size_t>(ncols));
    for (int i = 0; i < ncols; ++i) {
      switch (sqlite3_column_type(stmt, i)) {
        case SQLITE_NULL:
          row.push_back(Value::null());
          break;
        case SQLITE_INTEGER:
          row.push_back(Value::integer(sqlite3_column_int64(stmt, i)));
          break;
        case SQLITE_FLOAT:
          row.push_back(Value::real(sqlite3_column_double(stmt, i)));
          break;
        default: {
          const unsigned char* text = sqlite3_column_text(stmt, i);
          row.push_back(Value::text(text ? reinterpret_cast<const char*>(text) : ""));
          break;
        }
      }
    }
    result.rows.push_back(std::move(row));
  }
  sqlite3_finalize(stmt);
  return result;
}

}  // namespace qpl
