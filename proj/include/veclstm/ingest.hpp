#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "veclstm/types.hpp"
#include "veclstm/vectorizer.hpp"

namespace veclstm {

struct LabelSpan {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::string mode;

  bool operator==(const LabelSpan&) const = default;
};

struct Dataset {
  std::vector<LabeledSample> rows;
  NormalizationStats stats;
};

/// A GPS fix paired with the raw mode string of the span that covers it.
struct ModeTaggedPoint {
  TrajectoryPoint point;
  std::string mode;
};

// GeoLife PLT: six header lines, then "lat,lon,0,alt_feet,days,date,time".
std::vector<TrajectoryPoint> parse_plt(std::istream& in, const std::string& user_id = {});
std::vector<TrajectoryPoint> parse_plt(std::string_view contents, const std::string& user_id = {});

/// Inverse of the PLT row layout, for export and round-trip checks.
std::string format_plt_row(const TrajectoryPoint& point);

std::vector<LabelSpan> parse_labels(std::istream& in);
std::vector<LabelSpan> parse_labels(std::string_view contents);

/// Inclusive interval membership; overlapping spans resolve to the latest
/// start, ties to the later span in file order. Unlabeled points are dropped.
std::vector<ModeTaggedPoint> assign_labels(const std::vector<TrajectoryPoint>& points,
                                           const std::vector<LabelSpan>& spans);

/// Case-insensitive raw-mode -> label table.
class ModeMapping {
 public:
  /// walk, bike, bus, car, taxi, subway, train.
  static ModeMapping canonical();
  static ModeMapping from_pairs(const std::vector<std::pair<std::string, ActivityLabel>>& pairs);

  std::optional<ActivityLabel> operator()(std::string_view mode) const;

  const std::map<std::string, ActivityLabel>& table() const { return table_; }

 private:
  std::map<std::string, ActivityLabel> table_;
};

/// Canonical mapping; std::nullopt means the mode is rejected.
std::optional<ActivityLabel> map_mode(std::string_view mode);

/// One row per accepted point, ordered by (user, timestamp); the metadata
/// column comes from vectorize_metadata over the full point set.
Dataset build_dataset(const std::vector<ModeTaggedPoint>& labeled,
                      const VectorizationConfig& config = {},
                      const ModeMapping& mapping = ModeMapping::canonical());

struct FileIssue {
  std::filesystem::path file;
  std::string message;
};

struct GeoLifeScan {
  std::vector<ModeTaggedPoint> labeled;
  std::vector<FileIssue> issues;
  std::size_t users = 0;
  std::size_t files = 0;
};

/// Walks Data/<user>/Trajectory/*.plt and Data/<user>/labels.txt. `root`
/// may be the archive root or its Data directory. With `strict`, the first
/// unreadable file throws instead of being recorded as an issue.
GeoLifeScan scan_geolife(const std::filesystem::path& root, bool strict = false);

// time,lat,lon,alt,label,user,metadata
void write_dataset_csv(std::ostream& out, const Dataset& dataset);
Dataset read_dataset_csv(std::istream& in);

/// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int year, unsigned month, unsigned day);

}  // namespace veclstm
