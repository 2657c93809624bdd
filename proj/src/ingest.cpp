#include "veclstm/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "veclstm/csv.hpp"
#include "veclstm/error.hpp"

namespace veclstm {
namespace {

constexpr double kFeetToMeters = 0.3048;
constexpr double kMissingAltitudeFeet = -777.0;
// Days between 1899-12-30 (the PLT day-count origin) and 1970-01-01.
constexpr double kPltEpochOffsetDays = 25569.0;
constexpr int kPltHeaderLines = 6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(line.substr(start));
      return parts;
    }
    parts.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
T parse_or_throw(std::string_view text, std::size_t line_no, const char* what) {
  auto value = csv::parse<T>(text);
  if (!value) throw MalformedLine(line_no, std::string("bad ") + what + " '" + std::string(text) + "'");
  return *value;
}

// "yyyy?MM?dd" followed by "HH:mm:ss", joined by a single separator.
std::int64_t parse_datetime(std::string_view date, char date_sep, std::string_view time,
                            std::size_t line_no) {
  const auto ymd = split_on(trim(date), date_sep);
  const auto hms = split_on(trim(time), ':');
  if (ymd.size() != 3 || hms.size() != 3) throw MalformedLine(line_no, "bad date/time");
  const int year = parse_or_throw<int>(ymd[0], line_no, "year");
  const int month = parse_or_throw<int>(ymd[1], line_no, "month");
  const int day = parse_or_throw<int>(ymd[2], line_no, "day");
  const int hour = parse_or_throw<int>(hms[0], line_no, "hour");
  const int minute = parse_or_throw<int>(hms[1], line_no, "minute");
  const int second = parse_or_throw<int>(hms[2], line_no, "second");
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour < 0 || hour > 23 || minute < 0 ||
      minute > 59 || second < 0 || second > 60)
    throw MalformedLine(line_no, "date/time field out of range");
  return days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400 +
         hour * 3600 + minute * 60 + second;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace

std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  // Era-based conversion over 400-year cycles.
  year -= month <= 2;
  const int era = (year >= 0 ? year : year - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(year - era * 400);
  const unsigned doy = (153 * (month > 2 ? month - 3 : month + 9) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::vector<TrajectoryPoint> parse_plt(std::istream& in, const std::string& user_id) {
  std::vector<TrajectoryPoint> points;
  std::string line;
  std::size_t line_no = 0;
  while (line_no < kPltHeaderLines) {
    if (!std::getline(in, line)) throw Error(ErrorKind::TruncatedHeader, "PLT header has fewer than 6 lines");
    ++line_no;
  }
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_on(row, ',');
    if (fields.size() != 7)
      throw MalformedLine(line_no, "expected 7 fields, got " + std::to_string(fields.size()));
    TrajectoryPoint p;
    p.lat = parse_or_throw<double>(fields[0], line_no, "latitude");
    p.lon = parse_or_throw<double>(fields[1], line_no, "longitude");
    parse_or_throw<double>(fields[2], line_no, "reserved field");
    const double alt_feet = parse_or_throw<double>(fields[3], line_no, "altitude");
    parse_or_throw<double>(fields[4], line_no, "day count");
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
        p.lon < -180.0 || p.lon > 180.0)
      throw MalformedLine(line_no, "coordinate out of range");
    if (alt_feet != kMissingAltitudeFeet && std::isfinite(alt_feet)) p.alt = alt_feet * kFeetToMeters;
    p.timestamp = parse_datetime(fields[5], '-', fields[6], line_no);
    p.user_id = user_id;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<TrajectoryPoint> parse_plt(std::string_view contents, const std::string& user_id) {
  std::istringstream in{std::string(contents)};
  return parse_plt(in, user_id);
}

std::string format_plt_row(const TrajectoryPoint& point) {
  const std::int64_t days = point.timestamp >= 0 ? point.timestamp / 86400
                                                 : -((-point.timestamp + 86399) / 86400);
  const std::int64_t secs = point.timestamp - days * 86400;
  // Inverse of days_from_civil.
  const std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);

  const double alt_feet = point.alt ? *point.alt / kFeetToMeters : kMissingAltitudeFeet;
  const double day_count = static_cast<double>(point.timestamp) / 86400.0 + kPltEpochOffsetDays;
  std::ostringstream out;
  out << csv::number(point.lat) << ',' << csv::number(point.lon) << ",0," << csv::number(alt_feet)
      << ',' << csv::number(day_count) << ',' << y << '-' << two_digits(static_cast<int>(m)) << '-'
      << two_digits(static_cast<int>(d)) << ',' << two_digits(static_cast<int>(secs / 3600)) << ':'
      << two_digits(static_cast<int>(secs / 60 % 60)) << ':' << two_digits(static_cast<int>(secs % 60));
  return out.str();
}

std::vector<LabelSpan> parse_labels(std::istream& in) {
  std::vector<LabelSpan> spans;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) return spans;
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty()) continue;
    const auto fields = split_on(row, '\t');
    if (fields.size() != 3)
      throw MalformedLine(line_no, "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    auto stamp = [line_no](std::string_view text) {
      const auto parts = split_on(trim(text), ' ');
      if (parts.size() != 2) throw MalformedLine(line_no, "bad timestamp '" + std::string(text) + "'");
      return parse_datetime(parts[0], '/', parts[1], line_no);
    };
    LabelSpan span{stamp(fields[0]), stamp(fields[1]), std::string(trim(fields[2]))};
    if (span.mode.empty()) throw MalformedLine(line_no, "empty mode");
    if (span.start > span.end)
      throw Error(ErrorKind::InvertedSpan, "line " + std::to_string(line_no) + ": end precedes start");
    spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<LabelSpan> parse_labels(std::string_view contents) {
  std::istringstream in{std::string(contents)};
  return parse_labels(in);
}

std::vector<ModeTaggedPoint> assign_labels(const std::vector<TrajectoryPoint>& points,
                                           const std::vector<LabelSpan>& spans) {
  std::vector<ModeTaggedPoint> out;
  if (spans.empty()) return out;
  // Stable sort keeps file order among equal starts, so walking backwards
  // from the insertion point visits the preferred span first.
  std::vector<std::size_t> order(spans.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return spans[a].start < spans[b].start; });
  for (const auto& p : points) {
    auto it = std::upper_bound(order.begin(), order.end(), p.timestamp,
                               [&](std::int64_t t, std::size_t idx) { return t < spans[idx].start; });
    while (it != order.begin()) {
      --it;
      const LabelSpan& span = spans[*it];
      if (p.timestamp <= span.end) {
        out.push_back({p, span.mode});
        break;
      }
    }
  }
  return out;
}

ModeMapping ModeMapping::canonical() {
  std::vector<std::pair<std::string, ActivityLabel>> pairs;
  for (int c = 0; c < kNumClasses; ++c)
    pairs.emplace_back(std::string(kLabelNames[static_cast<std::size_t>(c)]), static_cast<ActivityLabel>(c));
  return from_pairs(pairs);
}

ModeMapping ModeMapping::from_pairs(const std::vector<std::pair<std::string, ActivityLabel>>& pairs) {
  ModeMapping m;
  for (const auto& [mode, label] : pairs) m.table_[lower(mode)] = label;
  return m;
}

std::optional<ActivityLabel> ModeMapping::operator()(std::string_view mode) const {
  const auto it = table_.find(lower(trim(mode)));
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

std::optional<ActivityLabel> map_mode(std::string_view mode) {
  static const ModeMapping canonical = ModeMapping::canonical();
  return canonical(mode);
}

Dataset build_dataset(const std::vector<ModeTaggedPoint>& labeled, const VectorizationConfig& config,
                      const ModeMapping& mapping) {
  std::vector<std::pair<TrajectoryPoint, ActivityLabel>> accepted;
  accepted.reserve(labeled.size());
  for (const auto& tagged : labeled)
    if (auto label = mapping(tagged.mode)) accepted.emplace_back(tagged.point, *label);
  if (accepted.empty()) throw Error(ErrorKind::EmptyDataset, "no labeled points with an accepted mode");

  std::stable_sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) {
    if (a.first.user_id != b.first.user_id) return a.first.user_id < b.first.user_id;
    return a.first.timestamp < b.first.timestamp;
  });

  std::vector<TrajectoryPoint> points;
  points.reserve(accepted.size());
  for (const auto& entry : accepted) points.push_back(entry.first);
  const Eigen::VectorXd metadata = vectorize_metadata(points, config);

  Dataset ds;
  ds.stats = fit_stats(points);
  ds.rows.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    ds.rows.push_back(LabeledSample{p.timestamp, p.lat, p.lon, p.alt, accepted[k].second, p.user_id,
                                    metadata(static_cast<Eigen::Index>(k))});
  }
  return ds;
}

GeoLifeScan scan_geolife(const std::filesystem::path& root, bool strict) {
  namespace fs = std::filesystem;
  fs::path data = root;
  if (fs::is_directory(root / "Data")) data = root / "Data";
  if (!fs::is_directory(data)) throw Error(ErrorKind::Io, "not a directory: " + data.string());

  std::vector<fs::path> users;
  for (const auto& entry : fs::directory_iterator(data))
    if (entry.is_directory()) users.push_back(entry.path());
  std::sort(users.begin(), users.end());

  GeoLifeScan scan;
  scan.users = users.size();
  auto record = [&](const fs::path& file, const std::exception& e) {
    if (strict) throw Error(ErrorKind::Io, file.string() + ": " + e.what());
    scan.issues.push_back({file, e.what()});
  };

  for (const auto& user_dir : users) {
    const std::string user = user_dir.filename().string();
    std::vector<LabelSpan> spans;
    const fs::path labels_file = user_dir / "labels.txt";
    if (fs::exists(labels_file)) {
      std::ifstream in(labels_file);
      try {
        spans = parse_labels(in);
      } catch (const Error& e) {
        record(labels_file, e);
      }
    }

    std::vector<fs::path> files;
    const fs::path traj_dir = user_dir / "Trajectory";
    if (fs::is_directory(traj_dir))
      for (const auto& entry : fs::directory_iterator(traj_dir))
        if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".plt")
          files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::vector<TrajectoryPoint> points;
    for (const auto& file : files) {
      ++scan.files;
      std::ifstream in(file);
      try {
        auto parsed = parse_plt(in, user);
        points.insert(points.end(), std::make_move_iterator(parsed.begin()),
                      std::make_move_iterator(parsed.end()));
      } catch (const Error& e) {
        record(file, e);
      }
    }
    auto tagged = assign_labels(points, spans);
    scan.labeled.insert(scan.labeled.end(), std::make_move_iterator(tagged.begin()),
                        std::make_move_iterator(tagged.end()));
  }
  return scan;
}

}  // namespace veclstm
