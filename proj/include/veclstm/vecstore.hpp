#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace veclstm {

/// One flattened user heatmap with its metadata.
struct VectorRecord {
  std::uint64_t record_id = 0;  // assigned by the store on insert
  std::string user;
  int label = 0;
  std::vector<float> vector;
  std::int64_t created_at = 0;  // UTC seconds

  bool operator==(const VectorRecord&) const = default;
};

/// Every set field must match; an empty filter matches everything.
struct RecordFilter {
  std::optional<std::string> user;
  std::optional<int> label;
  std::optional<std::pair<std::uint64_t, std::uint64_t>> id_range;  // inclusive

  bool matches(const VectorRecord& r) const;
};

enum class StoreBackend { Sql, File };

struct StoreDescriptor {
  StoreBackend backend = StoreBackend::File;
  std::string location;  // database path (":memory:" allowed) or file path

  /// "sqlite:<path>", "sqlite://<path>", "file:<path>" or a bare file path.
  static StoreDescriptor parse(std::string_view text);
};

class VectorStore {
 public:
  virtual ~VectorStore() = default;

  /// Creates or validates the schema. Calling it again is a no-op.
  virtual void init_schema() = 0;
  /// Appends all records or none. Assigns strictly increasing ids, written
  /// back into `records`.
  virtual std::size_t insert_batch(std::vector<VectorRecord>& records) = 0;
  /// Matching records in ascending id order.
  virtual std::vector<VectorRecord> fetch(const RecordFilter& filter = {}) = 0;
  virtual std::size_t count() = 0;
  virtual void close() = 0;

  StoreBackend backend() const { return backend_; }
  int grid_size() const { return grid_size_; }

 protected:
  VectorStore(StoreBackend backend, int grid_size) : backend_(backend), grid_size_(grid_size) {}

  void validate(const VectorRecord& r) const;

 private:
  StoreBackend backend_;
  int grid_size_;
};

std::unique_ptr<VectorStore> open_store(const StoreDescriptor& descriptor, int grid_size = 10);

// Driver seam for the SQL backend: positional parameters, rows of values.
using SqlValue = std::variant<std::monostate, std::int64_t, std::string, std::vector<std::uint8_t>>;
using SqlRow = std::vector<SqlValue>;

class SqlConnection {
 public:
  virtual ~SqlConnection() = default;

  virtual void execute(const std::string& sql) = 0;
  virtual std::vector<SqlRow> query(const std::string& sql, const std::vector<SqlValue>& params = {}) = 0;
  virtual bool has_table(const std::string& table) = 0;
  virtual std::vector<std::string> columns(const std::string& table) = 0;
  virtual void close() = 0;
};

std::unique_ptr<SqlConnection> connect_sqlite(const std::string& path);

std::unique_ptr<VectorStore> make_sql_store(std::unique_ptr<SqlConnection> connection, int grid_size);
std::unique_ptr<VectorStore> make_file_store(const std::string& path, int grid_size);

}  // namespace veclstm
