#include <istream>
#include <ostream>
#include <string>

#include "veclstm/csv.hpp"
#include "veclstm/error.hpp"
#include "veclstm/ingest.hpp"

namespace veclstm {
namespace {

constexpr std::string_view kHeader = "time,lat,lon,alt,label,user,metadata";

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& dataset) {
  out << kHeader << '\n';
  for (const auto& row : dataset.rows) {
    out << row.time << ',' << csv::number(row.lat) << ',' << csv::number(row.lon) << ','
        << (row.alt ? csv::number(*row.alt) : std::string()) << ',' << code(row.label) << ','
        << csv::field(row.user) << ',' << csv::number(row.metadata) << '\n';
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyDataset, "dataset CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw MalformedLine(1, "expected header '" + std::string(kHeader) + "'");

  Dataset ds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 7) throw MalformedLine(line_no, "expected 7 columns");
    LabeledSample s;
    auto num = [&](const std::string& text, const char* what) {
      auto v = csv::parse<double>(text);
      if (!v) throw MalformedLine(line_no, std::string("bad ") + what);
      return *v;
    };
    const auto time = csv::parse<std::int64_t>(f[0]);
    const auto label = csv::parse<int>(f[4]);
    if (!time) throw MalformedLine(line_no, "bad time");
    if (!label || *label < 0 || *label >= kNumClasses) throw MalformedLine(line_no, "bad label code");
    s.time = *time;
    s.lat = num(f[1], "lat");
    s.lon = num(f[2], "lon");
    if (!f[3].empty()) s.alt = num(f[3], "alt");
    s.label = static_cast<ActivityLabel>(*label);
    s.user = f[5];
    s.metadata = num(f[6], "metadata");
    ds.rows.push_back(std::move(s));
  }
  if (ds.rows.empty()) throw Error(ErrorKind::EmptyDataset, "dataset CSV has no rows");
  std::vector<TrajectoryPoint> points;
  points.reserve(ds.rows.size());
  for (const auto& r : ds.rows) points.push_back(to_point(r));
  ds.stats = fit_stats(points);
  return ds;
}

}  // namespace veclstm
