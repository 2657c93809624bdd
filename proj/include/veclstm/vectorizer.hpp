#pragma once

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <span>
#include <utility>

#include "veclstm/types.hpp"

namespace veclstm {

struct DimRange {
  double min = 0.0;
  double max = 1.0;

  bool operator==(const DimRange&) const = default;
};

/// Per-dimension extents used by min-max normalization.
struct NormalizationStats {
  DimRange lat;
  DimRange lon;
  DimRange alt;

  bool operator==(const NormalizationStats&) const = default;
};

enum class HeatmapMode { Count, Density };

/// Which scalar the per-sample "metadata" column carries.
enum class MetadataFeature { CellDensity, Altitude, Speed };

struct VectorizationConfig {
  int grid_size = 10;
  double missing_default = 0.5;
  HeatmapMode value_mode = HeatmapMode::Count;
  MetadataFeature metadata = MetadataFeature::CellDensity;
};

/// G x G histogram over normalized (lat, lon). Rows index latitude bins,
/// columns index longitude bins.
struct GridHeatmap {
  int grid_size = 0;
  HeatmapMode mode = HeatmapMode::Count;
  Eigen::MatrixXd values;

  double total() const { return values.sum(); }

  /// Row-major flattening, length G*G.
  Eigen::VectorXd flatten() const;
};

NormalizationStats fit_stats(std::span<const TrajectoryPoint> points);

/// (v - min) / (max - min), clamped to [0, 1]; a degenerate range yields 0.
double min_max_normalize(double value, const DimRange& range);

double impute_missing(std::optional<double> normalized, const VectorizationConfig& config);

/// Bin of a normalized coordinate pair; the last bin is right-inclusive.
std::pair<int, int> bin_index(double norm_lat, double norm_lon, int grid_size);

GridHeatmap histogram2d(std::span<const double> norm_lat, std::span<const double> norm_lon,
                        int grid_size, HeatmapMode mode = HeatmapMode::Count);

/// fit_stats -> normalize -> impute -> histogram2d, flattened row-major.
Eigen::VectorXd vectorize_trajectory(std::span<const TrajectoryPoint> points,
                                     const VectorizationConfig& config);

/// One scalar in [0, 1] per point, computed over the whole point set.
Eigen::VectorXd vectorize_metadata(std::span<const TrajectoryPoint> points,
                                   const VectorizationConfig& config);

// Dataset-wide COUNT heatmap with a per-coordinate lookup of cell count
// divided by the largest cell count.
class DensityLookup {
 public:
  static DensityLookup fit(std::span<const TrajectoryPoint> points, int grid_size);
  static DensityLookup fit(std::span<const double> lat, std::span<const double> lon, int grid_size);

  double operator()(double lat, double lon) const;

  const NormalizationStats& stats() const { return stats_; }
  const GridHeatmap& heatmap() const { return heatmap_; }

 private:
  NormalizationStats stats_;
  GridHeatmap heatmap_;
  double max_count_ = 1.0;
};

TrajectoryPoint to_point(const LabeledSample& sample);

/// G rows of G comma-separated values.
void write_heatmap_csv(std::ostream& out, const GridHeatmap& heatmap);

}  // namespace veclstm
