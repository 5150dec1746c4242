#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qpl/schema.hpp"
#include "qpl/value.hpp"

struct sqlite3;

namespace qpl {

class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& what) : std::runtime_error(what) {}
};

struct BackendResult {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;
};

// Minimal executor abstraction: submit one SQL statement, receive column
// names and rows. Any engine covering the common CTE subset fits behind it.
class SqlBackend {
 public:
  virtual ~SqlBackend() = default;
  virtual BackendResult execute(const std::string& sql) = 0;
};

// Statements that recreate a database's tables and contents on a backend
// (DROP TABLE IF EXISTS / CREATE TABLE / INSERT). Keys are intentionally not
// declared; the backend is a semantics oracle, not a constraint checker.
std::vector<std::string> database_to_sql(const Database& db);

// In-memory SQLite. LIKE is switched to case-sensitive to match the
// reference interpreter.
class SqliteBackend final : public SqlBackend {
 public:
  SqliteBackend();
  explicit SqliteBackend(const Database& db);
  ~SqliteBackend() override;

  SqliteBackend(const SqliteBackend&) = delete;
  SqliteBackend& operator=(const SqliteBackend&) = delete;

  void load(const Database& db);
  BackendResult execute(const std::string& sql) override;

 private:
  sqlite3* db_ = nullptr;
};

}  // namespace qpl
