#include <algorithm>
#include <filesystem>
#include <fstream>

#include "veclstm/byte_io.hpp"
#include "veclstm/error.hpp"
#include "veclstm/vecstore.hpp"

namespace veclstm {
namespace {

namespace fs = std::filesystem;

constexpr char kMagic[4] = {'V', 'L', 'V', 'S'};
constexpr std::uint16_t kVersion = 1;

struct FileHeader {
  std::uint16_t grid_size = 0;
  std::uint64_t count = 0;
};

FileHeader read_header(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic))
    throw Error(ErrorKind::SchemaMismatch, "not a vector store file");
  if (byte_io::get<std::uint16_t>(in, ErrorKind::SchemaMismatch) != kVersion)
    throw Error(ErrorKind::SchemaMismatch, "unsupported vector store version");
  FileHeader h;
  h.grid_size = byte_io::get<std::uint16_t>(in, ErrorKind::SchemaMismatch);
  h.count = byte_io::get<std::uint64_t>(in, ErrorKind::SchemaMismatch);
  return h;
}

void write_header(std::ostream& out, const FileHeader& h) {
  out.write(kMagic, 4);
  byte_io::put<std::uint16_t>(out, kVersion);
  byte_io::put<std::uint16_t>(out, h.grid_size);
  byte_io::put<std::uint64_t>(out, h.count);
}

void write_record(std::ostream& out, const VectorRecord& r) {
  byte_io::put<std::uint64_t>(out, r.record_id);
  byte_io::put_string16(out, r.user);
  byte_io::put<std::uint8_t>(out, static_cast<std::uint8_t>(r.label));
  byte_io::put<std::int64_t>(out, r.created_at);
  for (float v : r.vector) byte_io::put<float>(out, v);
}

VectorRecord read_record(std::istream& in, std::size_t cells) {
  constexpr auto kind = ErrorKind::StorageError;
  VectorRecord r;
  r.record_id = byte_io::get<std::uint64_t>(in, kind);
  r.user = byte_io::get_string16(in, kind);
  r.label = byte_io::get<std::uint8_t>(in, kind);
  r.created_at = byte_io::get<std::int64_t>(in, kind);
  r.vector.resize(cells);
  for (auto& v : r.vector) v = byte_io::get<float>(in, kind);
  return r;
}

class FileStore : public VectorStore {
 public:
  FileStore(fs::path path, int grid_size) : VectorStore(StoreBackend::File, grid_size), path_(std::move(path)) {
    const fs::path dir = path_.has_parent_path() ? path_.parent_path() : fs::path(".");
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw Error(ErrorKind::ConnectionFailed, "no such directory: " + dir.string());
    if (fs::exists(path_, ec) && !fs::is_regular_file(path_, ec))
      throw Error(ErrorKind::ConnectionFailed, "not a regular file: " + path_.string());
  }

  void init_schema() override {
    require_open();
    if (fs::exists(path_)) {
      std::ifstream in(path_, std::ios::binary);
      if (!in) throw Error(ErrorKind::ConnectionFailed, "cannot read " + path_.string());
      if (read_header(in).grid_size != grid_size())
        throw Error(ErrorKind::SchemaMismatch, "store holds a different grid size");
    } else {
      replace_with([&](std::ostream& out) { write_header(out, {static_cast<std::uint16_t>(grid_size()), 0}); });
    }
    initialized_ = true;
  }

  std::size_t insert_batch(std::vector<VectorRecord>& records) override {
    require_ready();
    if (records.empty()) return 0;
    for (const auto& r : records) validate(r);
    const auto existing = load();
    std::uint64_t next = existing.empty() ? 1 : existing.back().record_id + 1;

    std::vector<VectorRecord> batch = records;
    for (auto& r : batch) r.record_id = next++;
    replace_with([&](std::ostream& out) {
      write_header(out, {static_cast<std::uint16_t>(grid_size()), existing.size() + batch.size()});
      for (const auto& r : existing) write_record(out, r);
      for (const auto& r : batch) write_record(out, r);
    });
    records = std::move(batch);
    return records.size();
  }

  std::vector<VectorRecord> fetch(const RecordFilter& filter) override {
    require_ready();
    std::vector<VectorRecord> out;
    for (auto& r : load())
      if (filter.matches(r)) out.push_back(std::move(r));
    return out;
  }

  std::size_t count() override {
    require_ready();
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(ErrorKind::StorageError, "cannot read " + path_.string());
    return static_cast<std::size_t>(read_header(in).count);
  }

  void close() override { closed_ = true; }

 private:
  void require_open() const {
    if (closed_) throw Error(ErrorKind::StorageError, "store is closed");
  }
  void require_ready() const {
    require_open();
    if (!initialized_) throw Error(ErrorKind::StorageError, "schema not initialized");
  }

  std::vector<VectorRecord> load() const {
    std::ifstream in(path_, std::ios::binary);
    if (!in) throw Error(ErrorKind::StorageError, "cannot read " + path_.string());
    const FileHeader h = read_header(in);
    const std::size_t cells = static_cast<std::size_t>(h.grid_size) * h.grid_size;
    std::vector<VectorRecord> records;
    records.reserve(static_cast<std::size_t>(h.count));
    for (std::uint64_t k = 0; k < h.count; ++k) records.push_back(read_record(in, cells));
    if (in.peek() != std::char_traits<char>::eof())
      throw Error(ErrorKind::StorageError, "trailing bytes after the last record");
    return records;
  }

  // Writes a complete new file next to the store and renames it over the
  // old one, so readers see either the old or the new contents.
  template <typename Fn>
  void replace_with(Fn&& write) {
    const fs::path tmp = path_.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorKind::StorageError, "cannot write " + tmp.string());
      write(out);
      out.flush();
      if (!out) {
        std::error_code ec;
        fs::remove(tmp, ec);
        throw Error(ErrorKind::StorageError, "write failed: " + tmp.string());
      }
    }
    std::error_code ec;
    fs::rename(tmp, path_, ec);
    if (ec) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::StorageError, "cannot replace " + path_.string());
    }
  }

  fs::path path_;
  bool initialized_ = false;
  bool closed_ = false;
};

}  // namespace

std::unique_ptr<VectorStore> make_file_store(const std::string& path, int grid_size) {
  return std::make_unique<FileStore>(path, grid_size);
}

}  // namespace veclstm
