#include <sqlite3.h>

#include <algorithm>
#include <bit>
#include <cstdint>

#include "veclstm/error.hpp"
#include "veclstm/vecstore.hpp"

namespace veclstm {
namespace {

constexpr const char* kTable = "trajectory_vectors";
const std::vector<std::string> kColumns = {"record_id", "user_id", "label", "vec", "created_at"};

class SqliteConnection : public SqlConnection {
 public:
  explicit SqliteConnection(const std::string& path) {
    const int flags = SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_URI;
    if (sqlite3_open_v2(path.c_str(), &db_, flags, nullptr) != SQLITE_OK) {
      const std::string message = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      db_ = nullptr;
      throw Error(ErrorKind::ConnectionFailed, "cannot open " + path + ": " + message);
    }
    sqlite3_busy_timeout(db_, 5000);
  }
  ~SqliteConnection() override { close(); }

  void execute(const std::string& sql) override {
    char* message = nullptr;
    if (sqlite3_exec(handle(), sql.c_str(), nullptr, nullptr, &message) != SQLITE_OK) {
      const std::string text = message ? message : "unknown error";
      sqlite3_free(message);
      throw Error(ErrorKind::StorageError, text);
    }
  }

  std::vector<SqlRow> query(const std::string& sql, const std::vector<SqlValue>& params) override {
    sqlite3_stmt* stmt = nullptr;
    if (sqlite3_prepare_v2(handle(), sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) fail();
    struct Finalize {
      sqlite3_stmt* s;
      ~Finalize() { sqlite3_finalize(s); }
    } guard{stmt};

    for (std::size_t k = 0; k < params.size(); ++k) {
      const int slot = static_cast<int>(k) + 1;
      int rc = SQLITE_OK;
      if (const auto* i = std::get_if<std::int64_t>(&params[k])) rc = sqlite3_bind_int64(stmt, slot, *i);
      else if (const auto* s = std::get_if<std::string>(&params[k]))
        rc = sqlite3_bind_text(stmt, slot, s->data(), static_cast<int>(s->size()), SQLITE_TRANSIENT);
      else if (const auto* b = std::get_if<std::vector<std::uint8_t>>(&params[k]))
        rc = sqlite3_bind_blob(stmt, slot, b->data(), static_cast<int>(b->size()), SQLITE_TRANSIENT);
      else rc = sqlite3_bind_null(stmt, slot);
      if (rc != SQLITE_OK) fail();
    }

    std::vector<SqlRow> rows;
    for (;;) {
      const int rc = sqlite3_step(stmt);
      if (rc == SQLITE_DONE) break;
      if (rc != SQLITE_ROW) fail();
      SqlRow row(static_cast<std::size_t>(sqlite3_column_count(stmt)));
      for (int c = 0; c < static_cast<int>(row.size()); ++c) {
        switch (sqlite3_column_type(stmt, c)) {
          case SQLITE_INTEGER: row[c] = static_cast<std::int64_t>(sqlite3_column_int64(stmt, c)); break;
          case SQLITE_TEXT: {
            const auto* text = reinterpret_cast<const char*>(sqlite3_column_text(stmt, c));
            row[c] = std::string(text, static_cast<std::size_t>(sqlite3_column_bytes(stmt, c)));
            break;
          }
          case SQLITE_BLOB: {
            const auto* data = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, c));
            row[c] = std::vector<std::uint8_t>(data, data + sqlite3_column_bytes(stmt, c));
            break;
          }
          case SQLITE_NULL: break;
          default: throw Error(ErrorKind::StorageError, "unexpected column type");
        }
      }
      rows.push_back(std::move(row));
    }
    return rows;
  }

  bool has_table(const std::string& table) override {
    return !query("SELECT name FROM sqlite_master WHERE type = 'table' AND name = ?", {table}).empty();
  }

  std::vector<std::string> columns(const std::string& table) override {
    std::vector<std::string> names;
    for (const auto& row : query("SELECT name FROM pragma_table_info(?) ORDER BY cid", {table}))
      names.push_back(std::get<std::string>(row.at(0)));
    return names;
  }

  void close() override {
    if (db_) sqlite3_close(db_);
    db_ = nullptr;
  }

 private:
  sqlite3* handle() const {
    if (!db_) throw Error(ErrorKind::StorageError, "connection is closed");
    return db_;
  }
  [[noreturn]] void fail() const { throw Error(ErrorKind::StorageError, sqlite3_errmsg(db_)); }

  sqlite3* db_ = nullptr;
};

std::vector<std::uint8_t> encode(const std::vector<float>& v) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(v.size() * 4);
  for (float x : v) {
    const auto bits = std::bit_cast<std::uint32_t>(x);
    for (int k = 0; k < 4; ++k) bytes.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
  }
  return bytes;
}

std::vector<float> decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 4) throw Error(ErrorKind::StorageError, "vector blob is not a whole number of floats");
  std::vector<float> v(bytes.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= static_cast<std::uint32_t>(bytes[4 * i + k]) << (8 * k);
    v[i] = std::bit_cast<float>(bits);
  }
  return v;
}

class SqlStore : public VectorStore {
 public:
  SqlStore(std::unique_ptr<SqlConnection> db, int grid_size)
      : VectorStore(StoreBackend::Sql, grid_size), db_(std::move(db)) {}

  void init_schema() override {
    if (db_->has_table(kTable)) {
      if (db_->columns(kTable) != kColumns)
        throw Error(ErrorKind::SchemaMismatch, std::string(kTable) + " exists with different columns");
      return;
    }
    db_->execute("BEGIN");
    try {
      db_->execute(
          "CREATE TABLE IF NOT EXISTS trajectory_vectors (record_id BIGINT PRIMARY KEY, user_id VARCHAR(64) NOT NULL, "
          "label SMALLINT NOT NULL, vec BLOB NOT NULL, created_at BIGINT NOT NULL)");
      db_->execute("CREATE INDEX idx_tv_user ON trajectory_vectors(user_id)");
      db_->execute("CREATE INDEX idx_tv_label ON trajectory_vectors(label)");
      db_->execute("COMMIT");
    } catch (...) {
      rollback();
      throw;
    }
  }

  std::size_t insert_batch(std::vector<VectorRecord>& records) override {
    if (records.empty()) return 0;
    for (const auto& r : records) validate(r);
    std::vector<VectorRecord> batch = records;
    db_->execute("BEGIN IMMEDIATE");
    try {
      const auto max = db_->query("SELECT MAX(record_id) FROM trajectory_vectors");
      const auto* last = std::get_if<std::int64_t>(&max.at(0).at(0));
      auto next = static_cast<std::uint64_t>(last ? *last + 1 : 1);
      for (auto& r : batch) {
        r.record_id = next++;
        db_->query("INSERT INTO trajectory_vectors (record_id, user_id, label, vec, created_at) VALUES (?, ?, ?, ?, ?)",
                   {static_cast<std::int64_t>(r.record_id), r.user, static_cast<std::int64_t>(r.label), encode(r.vector),
                    r.created_at});
      }
      db_->execute("COMMIT");
    } catch (...) {
      rollback();
      throw;
    }
    records = std::move(batch);
    return records.size();
  }

  std::vector<VectorRecord> fetch(const RecordFilter& filter) override {
    std::string sql = "SELECT record_id, user_id, label, vec, created_at FROM trajectory_vectors WHERE 1 = 1";
    std::vector<SqlValue> params;
    if (filter.user) {
      sql += " AND user_id = ?";
      params.emplace_back(*filter.user);
    }
    if (filter.label) {
      sql += " AND label = ?";
      params.emplace_back(static_cast<std::int64_t>(*filter.label));
    }
    if (filter.id_range) {
      // Ids are assigned from 1 and fit in a signed column.
      if (filter.id_range->first > filter.id_range->second) return {};
      sql += " AND record_id BETWEEN ? AND ?";
      params.emplace_back(static_cast<std::int64_t>(std::min<std::uint64_t>(filter.id_range->first, INT64_MAX)));
      params.emplace_back(static_cast<std::int64_t>(std::min<std::uint64_t>(filter.id_range->second, INT64_MAX)));
    }
    sql += " ORDER BY record_id";

    std::vector<VectorRecord> out;
    for (const auto& row : db_->query(sql, params)) {
      VectorRecord r;
      r.record_id = static_cast<std::uint64_t>(std::get<std::int64_t>(row.at(0)));
      r.user = std::get<std::string>(row.at(1));
      r.label = static_cast<int>(std::get<std::int64_t>(row.at(2)));
      r.vector = decode(std::get<std::vector<std::uint8_t>>(row.at(3)));
      r.created_at = std::get<std::int64_t>(row.at(4));
      out.push_back(std::move(r));
    }
    return out;
  }

  std::size_t count() override {
    const auto rows = db_->query("SELECT COUNT(*) FROM trajectory_vectors");
    return static_cast<std::size_t>(std::get<std::int64_t>(rows.at(0).at(0)));
  }

  void close() override { db_->close(); }

 private:
  void rollback() noexcept {
    try {
      db_->execute("ROLLBACK");
    } catch (const Error&) {
    }
  }

  std::unique_ptr<SqlConnection> db_;
};

}  // namespace

std::unique_ptr<SqlConnection> connect_sqlite(const std::string& path) {
  return std::make_unique<SqliteConnection>(path);
}

std::unique_ptr<VectorStore> make_sql_store(std::unique_ptr<SqlConnection> connection, int grid_size) {
  return std::make_unique<SqlStore>(std::move(connection), grid_size);
}

}  // namespace veclstm
