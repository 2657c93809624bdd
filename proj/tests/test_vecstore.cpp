#include <doctest.h>

#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include "veclstm/error.hpp"
#include "veclstm/types.hpp"
#include "veclstm/vecstore.hpp"

using namespace veclstm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("veclstm_store_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Io;
}

VectorRecord random_record(std::mt19937_64& rng, int grid) {
  std::uniform_int_distribution<int> user(0, 4), label(0, kNumClasses - 1);
  std::normal_distribution<float> value(0.0f, 100.0f);
  VectorRecord r;
  r.user = "user" + std::to_string(user(rng));
  r.label = label(rng);
  r.vector.resize(static_cast<std::size_t>(grid * grid));
  for (auto& v : r.vector) v = value(rng);
  r.created_at = 1'700'000'000 + static_cast<std::int64_t>(rng() % 1000);
  return r;
}

// Backend under test, reopenable to simulate a restart.
struct Backend {
  StoreBackend kind;
  fs::path dir;

  std::string location() const { return (dir / (kind == StoreBackend::Sql ? "v.db" : "v.vls")).string(); }
  std::unique_ptr<VectorStore> open(int grid = 4) const {
    auto s = open_store({kind, location()}, grid);
    s->init_schema();
    return s;
  }
};

std::vector<Backend> backends(const std::string& name) {
  return {{StoreBackend::Sql, scratch(name + "_sql")}, {StoreBackend::File, scratch(name + "_file")}};
}

const char* name_of(StoreBackend b) { return b == StoreBackend::Sql ? "sql" : "file"; }

bool bit_identical(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::bit_cast<std::uint32_t>(a[k]) != std::bit_cast<std::uint32_t>(b[k])) return false;
  return true;
}

}  // namespace

TEST_CASE("descriptor parsing") {
  CHECK(StoreDescriptor::parse("sqlite:///tmp/a.db").backend == StoreBackend::Sql);
  CHECK(StoreDescriptor::parse("sqlite:///tmp/a.db").location == "/tmp/a.db");
  CHECK(StoreDescriptor::parse("sqlite:a.db").location == "a.db");
  CHECK(StoreDescriptor::parse("sqlite::memory:").location == ":memory:");
  CHECK(StoreDescriptor::parse("file:/tmp/v.vls").backend == StoreBackend::File);
  CHECK(StoreDescriptor::parse("file:/tmp/v.vls").location == "/tmp/v.vls");
  CHECK(StoreDescriptor::parse("out/v.vls").backend == StoreBackend::File);
  CHECK(StoreDescriptor::parse("out/v.vls").location == "out/v.vls");
}

TEST_CASE("record filter") {
  VectorRecord r;
  r.record_id = 5;
  r.user = "a";
  r.label = 2;
  CHECK(RecordFilter{}.matches(r));
  CHECK(RecordFilter{"a", 2, std::pair<std::uint64_t, std::uint64_t>{5, 5}}.matches(r));
  CHECK_FALSE(RecordFilter{"b", {}, {}}.matches(r));
  CHECK_FALSE(RecordFilter{{}, 3, {}}.matches(r));
  CHECK_FALSE(RecordFilter{{}, {}, std::pair<std::uint64_t, std::uint64_t>{6, 9}}.matches(r));
}

TEST_CASE("store contract on both backends") {
  for (const Backend& b : backends("contract")) {
    CAPTURE(name_of(b.kind));
    std::mt19937_64 rng(1);
    auto store = b.open();
    store->init_schema();  // idempotent
    CHECK(store->count() == 0);
    CHECK(store->backend() == b.kind);

    std::vector<VectorRecord> none;
    CHECK(store->insert_batch(none) == 0);
    CHECK(store->count() == 0);

    std::vector<VectorRecord> batch = {random_record(rng, 4), random_record(rng, 4), random_record(rng, 4)};
    batch[1].vector[3] = -0.0f;
    batch[2].vector[0] = std::numeric_limits<float>::denorm_min();
    CHECK(store->insert_batch(batch) == 3);
    CHECK(batch[0].record_id == 1);
    CHECK(batch[1].record_id == 2);
    CHECK(batch[2].record_id == 3);

    const auto all = store->fetch();
    REQUIRE(all.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(all[k] == batch[k]);
      CHECK(bit_identical(all[k].vector, batch[k].vector));
    }

    // One bad record rejects the whole batch.
    std::vector<VectorRecord> mixed = {random_record(rng, 4), random_record(rng, 4)};
    mixed[1].vector.pop_back();
    CHECK(kind_of([&] { store->insert_batch(mixed); }) == ErrorKind::ValidationError);
    mixed[1] = random_record(rng, 4);
    mixed[1].label = 7;
    CHECK(kind_of([&] { store->insert_batch(mixed); }) == ErrorKind::ValidationError);
    mixed[1].label = 1;
    mixed[1].vector[0] = std::nanf("");
    CHECK(kind_of([&] { store->insert_batch(mixed); }) == ErrorKind::ValidationError);
    mixed[1].vector[0] = 0.0f;
    mixed[1].user = std::string(65, 'x');
    CHECK(kind_of([&] { store->insert_batch(mixed); }) == ErrorKind::ValidationError);
    CHECK(store->count() == 3);

    mixed[1].user = "ok";
    store->insert_batch(mixed);
    CHECK(mixed[0].record_id == 4);
    CHECK(mixed[1].record_id == 5);

    store->close();
    CHECK(kind_of([&] { store->count(); }) == ErrorKind::StorageError);

    // Restart: same records, ids keep increasing.
    auto again = b.open();
    CHECK(again->count() == 5);
    std::vector<VectorRecord> one = {random_record(rng, 4)};
    again->insert_batch(one);
    CHECK(one[0].record_id == 6);
    again->close();

    // Opening with another grid size is a schema conflict for the file
    // store; the SQL store validates vector lengths instead.
    if (b.kind == StoreBackend::File)
      CHECK(kind_of([&] { b.open(5); }) == ErrorKind::SchemaMismatch);
    fs::remove_all(b.dir);
  }
}

TEST_CASE("connection failures") {
  const fs::path missing = fs::temp_directory_path() / "veclstm_no_such_dir" / "deeper";
  CHECK(kind_of([&] { open_store({StoreBackend::File, (missing / "v.vls").string()}); }) ==
        ErrorKind::ConnectionFailed);
  CHECK(kind_of([&] { open_store({StoreBackend::Sql, (missing / "v.db").string()}); }) ==
        ErrorKind::ConnectionFailed);
  const fs::path dir = scratch("connfail");
  CHECK(kind_of([&] { open_store({StoreBackend::File, dir.string()}); }) == ErrorKind::ConnectionFailed);
  fs::remove_all(dir);
}

TEST_CASE("operations before init_schema fail") {
  const fs::path dir = scratch("noinit");
  auto store = open_store({StoreBackend::File, (dir / "v.vls").string()}, 4);
  CHECK(kind_of([&] { store->count(); }) == ErrorKind::StorageError);
  fs::remove_all(dir);
}

TEST_CASE("schema mismatches") {
  const fs::path dir = scratch("schema");
  SUBCASE("sql table with other columns") {
    const std::string db = (dir / "v.db").string();
    auto conn = connect_sqlite(db);
    conn->execute("CREATE TABLE trajectory_vectors (id INTEGER, payload BLOB)");
    conn->close();
    auto store = open_store({StoreBackend::Sql, db}, 4);
    CHECK(kind_of([&] { store->init_schema(); }) == ErrorKind::SchemaMismatch);
  }
  SUBCASE("file with a foreign header") {
    const fs::path file = dir / "v.vls";
    std::ofstream(file, std::ios::binary) << "NOPE and some more bytes";
    auto store = open_store({StoreBackend::File, file.string()}, 4);
    CHECK(kind_of([&] { store->init_schema(); }) == ErrorKind::SchemaMismatch);
  }
  fs::remove_all(dir);
}

TEST_CASE("model-based sequence of 500 operations") {
  for (const Backend& b : backends("model")) {
    CAPTURE(name_of(b.kind));
    std::mt19937_64 rng(77);
    auto store = b.open();
    std::vector<VectorRecord> model;
    std::uint64_t next_id = 1;
    std::uniform_int_distribution<int> op(0, 9), batch_size(0, 4), user(0, 5), label(0, kNumClasses - 1);

    for (int step = 0; step < 500; ++step) {
      CAPTURE(step);
      const int o = op(rng);
      if (o < 4) {
        std::vector<VectorRecord> batch;
        const int n = batch_size(rng);
        for (int k = 0; k < n; ++k) batch.push_back(random_record(rng, 4));
        const bool poison = n > 0 && op(rng) == 0;
        if (poison) batch.back().label = -1;
        if (poison) {
          CHECK(kind_of([&] { store->insert_batch(batch); }) == ErrorKind::ValidationError);
        } else {
          CHECK(store->insert_batch(batch) == batch.size());
          for (auto& r : batch) {
            CHECK(r.record_id == next_id);
            ++next_id;
            model.push_back(r);
          }
        }
      } else if (o < 8) {
        RecordFilter f;
        if (op(rng) < 5) f.user = "user" + std::to_string(user(rng));
        if (op(rng) < 3) f.label = label(rng);
        if (op(rng) < 3) {
          const std::uint64_t lo = rng() % (next_id + 1);
          f.id_range = {lo, lo + rng() % 20};
        }
        std::vector<VectorRecord> expected;
        for (const auto& r : model)
          if (f.matches(r)) expected.push_back(r);
        const auto got = store->fetch(f);
        REQUIRE(got.size() == expected.size());
        for (std::size_t k = 0; k < got.size(); ++k) {
          CHECK(got[k] == expected[k]);
          CHECK(bit_identical(got[k].vector, expected[k].vector));
        }
      } else if (o == 8) {
        CHECK(store->count() == model.size());
      } else {
        store->close();
        store = b.open();
      }
    }
    CHECK(store->fetch() == model);
    fs::remove_all(b.dir);
  }
}

TEST_CASE("sql store works in memory") {
  auto store = open_store(StoreDescriptor::parse("sqlite::memory:"), 3);
  store->init_schema();
  std::mt19937_64 rng(3);
  std::vector<VectorRecord> batch = {random_record(rng, 3)};
  store->insert_batch(batch);
  CHECK(store->fetch({batch[0].user, {}, {}}) == batch);
}
