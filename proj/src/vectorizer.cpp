#include "veclstm/vectorizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "veclstm/error.hpp"

namespace veclstm {
namespace {

constexpr double kEarthRadiusM = 6371008.8;

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kDeg = 3.14159265358979323846 / 180.0;
  const double dlat = (lat2 - lat1) * kDeg;
  const double dlon = (lon2 - lon1) * kDeg;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * kDeg) * std::cos(lat2 * kDeg) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

DimRange range_of(std::span<const double> values) {
  if (values.empty()) return DimRange{0.0, 1.0};
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return DimRange{*lo, *hi};
}

void require_grid(int grid_size) {
  if (grid_size < 1) throw Error(ErrorKind::OutOfRange, "grid_size must be >= 1");
}

}  // namespace

Eigen::VectorXd GridHeatmap::flatten() const {
  Eigen::VectorXd flat(values.size());
  for (int i = 0; i < grid_size; ++i)
    for (int j = 0; j < grid_size; ++j) flat(i * grid_size + j) = values(i, j);
  return flat;
}

NormalizationStats fit_stats(std::span<const TrajectoryPoint> points) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "fit_stats on no points");
  std::vector<double> lat, lon, alt;
  lat.reserve(points.size());
  lon.reserve(points.size());
  for (const auto& p : points) {
    lat.push_back(p.lat);
    lon.push_back(p.lon);
    if (p.alt) alt.push_back(*p.alt);
  }
  return NormalizationStats{range_of(lat), range_of(lon), range_of(alt)};
}

double min_max_normalize(double value, const DimRange& range) {
  const double span = range.max - range.min;
  if (!(span > 0.0)) return 0.0;
  return std::clamp((value - range.min) / span, 0.0, 1.0);
}

double impute_missing(std::optional<double> normalized, const VectorizationConfig& config) {
  return normalized ? *normalized : config.missing_default;
}

std::pair<int, int> bin_index(double norm_lat, double norm_lon, int grid_size) {
  auto bin = [grid_size](double v) {
    const double scaled = std::floor(v * grid_size);
    if (!(scaled > 0.0)) return 0;
    return static_cast<int>(std::min<double>(scaled, grid_size - 1));
  };
  return {bin(norm_lat), bin(norm_lon)};
}

GridHeatmap histogram2d(std::span<const double> norm_lat, std::span<const double> norm_lon,
                        int grid_size, HeatmapMode mode) {
  require_grid(grid_size);
  if (norm_lat.size() != norm_lon.size())
    throw Error(ErrorKind::LengthMismatch, "histogram2d: lat/lon lengths differ");
  GridHeatmap h{grid_size, mode, Eigen::MatrixXd::Zero(grid_size, grid_size)};
  for (std::size_t k = 0; k < norm_lat.size(); ++k) {
    const auto [i, j] = bin_index(norm_lat[k], norm_lon[k], grid_size);
    h.values(i, j) += 1.0;
  }
  if (mode == HeatmapMode::Density && !norm_lat.empty())
    h.values /= static_cast<double>(norm_lat.size());
  return h;
}

Eigen::VectorXd vectorize_trajectory(std::span<const TrajectoryPoint> points,
                                     const VectorizationConfig& config) {
  require_grid(config.grid_size);
  const NormalizationStats stats = fit_stats(points);
  std::vector<double> lat(points.size()), lon(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    lat[k] = impute_missing(min_max_normalize(points[k].lat, stats.lat), config);
    lon[k] = impute_missing(min_max_normalize(points[k].lon, stats.lon), config);
  }
  return histogram2d(lat, lon, config.grid_size, config.value_mode).flatten();
}

DensityLookup DensityLookup::fit(std::span<const TrajectoryPoint> points, int grid_size) {
  std::vector<double> lat(points.size()), lon(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    lat[k] = points[k].lat;
    lon[k] = points[k].lon;
  }
  return fit(lat, lon, grid_size);
}

DensityLookup DensityLookup::fit(std::span<const double> lat, std::span<const double> lon, int grid_size) {
  require_grid(grid_size);
  if (lat.size() != lon.size()) throw Error(ErrorKind::LengthMismatch, "DensityLookup: lat/lon lengths differ");
  if (lat.empty()) throw Error(ErrorKind::EmptyInput, "DensityLookup on no points");
  DensityLookup lookup;
  lookup.stats_.lat = range_of(lat);
  lookup.stats_.lon = range_of(lon);
  std::vector<double> nlat(lat.size()), nlon(lon.size());
  for (std::size_t k = 0; k < lat.size(); ++k) {
    nlat[k] = min_max_normalize(lat[k], lookup.stats_.lat);
    nlon[k] = min_max_normalize(lon[k], lookup.stats_.lon);
  }
  lookup.heatmap_ = histogram2d(nlat, nlon, grid_size, HeatmapMode::Count);
  lookup.max_count_ = lookup.heatmap_.values.maxCoeff();
  return lookup;
}

double DensityLookup::operator()(double lat, double lon) const {
  const auto [i, j] = bin_index(min_max_normalize(lat, stats_.lat),
                                min_max_normalize(lon, stats_.lon), heatmap_.grid_size);
  return heatmap_.values(i, j) / max_count_;
}

Eigen::VectorXd vectorize_metadata(std::span<const TrajectoryPoint> points,
                                   const VectorizationConfig& config) {
  if (points.empty()) throw Error(ErrorKind::EmptyInput, "vectorize_metadata on no points");
  Eigen::VectorXd out(static_cast<Eigen::Index>(points.size()));

  switch (config.metadata) {
    case MetadataFeature::CellDensity: {
      const DensityLookup lookup = DensityLookup::fit(points, config.grid_size);
      for (std::size_t k = 0; k < points.size(); ++k) out(k) = lookup(points[k].lat, points[k].lon);
      break;
    }
    case MetadataFeature::Altitude: {
      const NormalizationStats stats = fit_stats(points);
      for (std::size_t k = 0; k < points.size(); ++k) {
        std::optional<double> n;
        if (points[k].alt) n = min_max_normalize(*points[k].alt, stats.alt);
        out(k) = impute_missing(n, config);
      }
      break;
    }
    case MetadataFeature::Speed: {
      // Speed to the previous fix of the same user, in input order.
      std::unordered_map<std::string, std::size_t> previous;
      std::vector<double> speed(points.size(), 0.0);
      for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& p = points[k];
        if (auto it = previous.find(p.user_id); it != previous.end()) {
          const auto& q = points[it->second];
          const double dt = static_cast<double>(p.timestamp - q.timestamp);
          if (dt > 0.0) speed[k] = haversine_m(q.lat, q.lon, p.lat, p.lon) / dt;
          it->second = k;
        } else {
          previous.emplace(p.user_id, k);
        }
      }
      const DimRange range = range_of(speed);
      for (std::size_t k = 0; k < points.size(); ++k) out(k) = min_max_normalize(speed[k], range);
      break;
    }
  }
  return out;
}

TrajectoryPoint to_point(const LabeledSample& sample) {
  return TrajectoryPoint{sample.time, sample.lat, sample.lon, sample.alt, sample.user};
}

void write_heatmap_csv(std::ostream& out, const GridHeatmap& heatmap) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  for (int i = 0; i < heatmap.grid_size; ++i) {
    for (int j = 0; j < heatmap.grid_size; ++j) {
      if (j) out << ',';
      out << heatmap.values(i, j);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace veclstm
