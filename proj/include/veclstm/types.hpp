#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace veclstm {

/// One timestamped GPS fix. `alt` is in meters; empty means the source
/// reported no valid altitude.
struct TrajectoryPoint {
  std::int64_t timestamp = 0;  // UTC seconds since epoch
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> alt;
  std::string user_id;

  bool operator==(const TrajectoryPoint&) const = default;
};

inline constexpr int kNumClasses = 7;

/// Transportation mode. Codes are stable and index the model's output layer.
enum class ActivityLabel : std::uint8_t {
  Walk = 0,
  Bike = 1,
  Bus = 2,
  Car = 3,
  Taxi = 4,
  Subway = 5,
  Train = 6,
};

inline constexpr std::array<std::string_view, kNumClasses> kLabelNames = {
    "walk", "bike", "bus", "car", "taxi", "subway", "train"};

constexpr int code(ActivityLabel label) { return static_cast<int>(label); }

constexpr std::string_view label_name(ActivityLabel label) {
  return kLabelNames[static_cast<std::size_t>(label)];
}

/// One dataset row: time, lat, lon, alt, label, user, metadata.
struct LabeledSample {
  std::int64_t time = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> alt;
  ActivityLabel label = ActivityLabel::Walk;
  std::string user;
  double metadata = 0.0;

  bool operator==(const LabeledSample&) const = default;
};

}  // namespace veclstm
