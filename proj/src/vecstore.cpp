#include "veclstm/vecstore.hpp"

#include <cmath>

#include "veclstm/error.hpp"
#include "veclstm/types.hpp"

namespace veclstm {

bool RecordFilter::matches(const VectorRecord& r) const {
  if (user && r.user != *user) return false;
  if (label && r.label != *label) return false;
  if (id_range && (r.record_id < id_range->first || r.record_id > id_range->second)) return false;
  return true;
}

StoreDescriptor StoreDescriptor::parse(std::string_view text) {
  auto strip = [&](std::string_view prefix) {
    if (!text.starts_with(prefix)) return false;
    text.remove_prefix(prefix.size());
    return true;
  };
  StoreDescriptor d;
  if (strip("sqlite://") || strip("sqlite:")) d.backend = StoreBackend::Sql;
  else {
    strip("file:");
    d.backend = StoreBackend::File;
  }
  if (text.empty()) throw Error(ErrorKind::Usage, "store descriptor has no location");
  d.location = std::string(text);
  return d;
}

void VectorStore::validate(const VectorRecord& r) const {
  if (r.vector.size() != static_cast<std::size_t>(grid_size_) * static_cast<std::size_t>(grid_size_))
    throw Error(ErrorKind::ValidationError, "vector length " + std::to_string(r.vector.size()) + ", expected " +
                                                std::to_string(grid_size_ * grid_size_));
  if (r.label < 0 || r.label >= kNumClasses) throw Error(ErrorKind::ValidationError, "label out of range");
  if (r.user.size() > 64) throw Error(ErrorKind::ValidationError, "user id longer than 64 bytes");
  for (float v : r.vector)
    if (!std::isfinite(v)) throw Error(ErrorKind::ValidationError, "non-finite vector component");
}

std::unique_ptr<VectorStore> open_store(const StoreDescriptor& descriptor, int grid_size) {
  if (grid_size < 1 || grid_size > 0xFFFF) throw Error(ErrorKind::OutOfRange, "grid_size out of range");
  if (descriptor.backend == StoreBackend::Sql)
    return make_sql_store(connect_sqlite(descriptor.location), grid_size);
  return make_file_store(descriptor.location, grid_size);
}

}  // namespace veclstm
