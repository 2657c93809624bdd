#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "veclstm/error.hpp"
#include "veclstm/vectorizer.hpp"

using namespace veclstm;
using Eigen::MatrixXd;

namespace {

std::vector<TrajectoryPoint> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(39.5, 40.5), lon(116.0, 117.0), alt(0.0, 300.0);
  std::vector<TrajectoryPoint> pts;
  for (std::size_t k = 0; k < n; ++k)
    pts.push_back({static_cast<std::int64_t>(k), lat(rng), lon(rng), alt(rng), "u1"});
  return pts;
}

double great_circle_m(double lat1, double lon1, double lat2, double lon2) {
  const double r = 6371000.0, d = 3.14159265358979323846 / 180.0;
  const double a = std::pow(std::sin((lat2 - lat1) * d / 2), 2) +
                   std::cos(lat1 * d) * std::cos(lat2 * d) * std::pow(std::sin((lon2 - lon1) * d / 2), 2);
  return 2 * r * std::asin(std::sqrt(a));
}

}  // namespace

TEST_CASE("count heatmap of 1000 points matches a per-point scan") {
  const auto pts = random_points(1000, 3);
  std::vector<double> lat, lon;
  for (const auto& p : pts) {
    lat.push_back(p.lat);
    lon.push_back(p.lon);
  }
  for (int grid : {1, 3, 10}) {
    CAPTURE(grid);
    VectorizationConfig config;
    config.grid_size = grid;
    const Eigen::VectorXd v = vectorize_trajectory(pts, config);
    const MatrixXd oracle = support::brute_force_heatmap(lat, lon, grid);
    REQUIRE(v.size() == grid * grid);
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) CHECK(v(i * grid + j) == oracle(i, j));
    CHECK(v.sum() == 1000.0);
  }
}

TEST_CASE("density heatmap sums to one") {
  const auto pts = random_points(257, 4);
  VectorizationConfig config;
  config.value_mode = HeatmapMode::Density;
  const Eigen::VectorXd density = vectorize_trajectory(pts, config);
  config.value_mode = HeatmapMode::Count;
  const Eigen::VectorXd count = vectorize_trajectory(pts, config);
  CHECK(density.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((density * 257.0 - count).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("bin edges") {
  CHECK(bin_index(0.0, 0.0, 10) == std::pair{0, 0});
  CHECK(bin_index(0.1, 0.5, 10) == std::pair{1, 5});
  CHECK(bin_index(0.0999, 0.9999, 10) == std::pair{0, 9});
  // The top edge belongs to the last bin.
  CHECK(bin_index(1.0, 1.0, 10) == std::pair{9, 9});
  CHECK(bin_index(1.0, 0.0, 1) == std::pair{0, 0});
  for (double v = 0.0; v <= 1.0; v += 0.0137) CHECK(bin_index(v, v, 7).first == support::scan_bin(v, 7));
}

TEST_CASE("min-max normalization and imputation") {
  CHECK(min_max_normalize(5.0, {0.0, 10.0}) == 0.5);
  CHECK(min_max_normalize(-1.0, {0.0, 10.0}) == 0.0);
  CHECK(min_max_normalize(11.0, {0.0, 10.0}) == 1.0);
  CHECK(min_max_normalize(3.0, {3.0, 3.0}) == 0.0);
  VectorizationConfig c;
  CHECK(impute_missing(std::nullopt, c) == 0.5);
  c.missing_default = 0.25;
  CHECK(impute_missing(std::nullopt, c) == 0.25);
  CHECK(impute_missing(0.7, c) == 0.7);
}

TEST_CASE("fit stats ignore missing altitude") {
  std::vector<TrajectoryPoint> pts = {{0, 1.0, 2.0, 10.0, "a"}, {1, 3.0, 5.0, std::nullopt, "a"},
                                      {2, 2.0, 4.0, 30.0, "a"}};
  const auto s = fit_stats(pts);
  CHECK(s.lat == DimRange{1.0, 3.0});
  CHECK(s.lon == DimRange{2.0, 5.0});
  CHECK(s.alt == DimRange{10.0, 30.0});

  VectorizationConfig c;
  c.metadata = MetadataFeature::Altitude;
  const auto meta = vectorize_metadata(pts, c);
  CHECK(meta(0) == 0.0);
  CHECK(meta(1) == 0.5);
  CHECK(meta(2) == 1.0);
}

TEST_CASE("input errors") {
  const std::vector<double> a = {0.1, 0.2}, b = {0.1};
  CHECK_THROWS_AS(histogram2d(a, b, 10), Error);
  try {
    histogram2d(a, b, 10);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LengthMismatch);
  }
  CHECK_THROWS_AS(fit_stats(std::vector<TrajectoryPoint>{}), Error);
  CHECK_THROWS_AS(histogram2d(a, a, 0), Error);
  CHECK_THROWS_AS(DensityLookup::fit(a, b, 10), Error);
}

TEST_CASE("density lookup is the cell count over the largest cell") {
  const auto pts = random_points(500, 5);
  const DensityLookup lookup = DensityLookup::fit(pts, 10);
  std::vector<double> lat, lon;
  for (const auto& p : pts) {
    lat.push_back(p.lat);
    lon.push_back(p.lon);
  }
  const MatrixXd counts = support::brute_force_heatmap(lat, lon, 10);
  const double peak = counts.maxCoeff();
  for (std::size_t k = 0; k < pts.size(); k += 17) {
    const double a = (pts[k].lat - lookup.stats().lat.min) / (lookup.stats().lat.max - lookup.stats().lat.min);
    const double b = (pts[k].lon - lookup.stats().lon.min) / (lookup.stats().lon.max - lookup.stats().lon.min);
    CHECK(lookup(pts[k].lat, pts[k].lon) == counts(support::scan_bin(a, 10), support::scan_bin(b, 10)) / peak);
  }
  VectorizationConfig c;
  const auto meta = vectorize_metadata(pts, c);
  CHECK(meta.maxCoeff() == 1.0);
  CHECK(meta.minCoeff() > 0.0);
}

TEST_CASE("speed metadata follows each user's previous fix") {
  const std::vector<TrajectoryPoint> pts = {
      {0, 39.90, 116.30, 0.0, "a"}, {0, 40.00, 116.00, 0.0, "b"}, {10, 39.901, 116.30, 0.0, "a"},
      {30, 39.903, 116.30, 0.0, "a"}, {20, 40.00, 116.001, 0.0, "b"}};
  VectorizationConfig c;
  c.metadata = MetadataFeature::Speed;
  const auto meta = vectorize_metadata(pts, c);
  const std::vector<double> raw = {0.0, 0.0, great_circle_m(39.90, 116.30, 39.901, 116.30) / 10,
                                   great_circle_m(39.901, 116.30, 39.903, 116.30) / 20,
                                   great_circle_m(40.00, 116.00, 40.00, 116.001) / 20};
  const double hi = *std::max_element(raw.begin(), raw.end());
  for (std::size_t k = 0; k < raw.size(); ++k) CHECK(meta(k) == doctest::Approx(raw[k] / hi).epsilon(1e-6));
}

TEST_CASE("flatten is row-major and csv has one line per row") {
  GridHeatmap h{2, HeatmapMode::Count, MatrixXd(2, 2)};
  h.values << 1, 2, 3, 4;
  const auto f = h.flatten();
  CHECK(f(1) == 2);
  CHECK(f(2) == 3);
  std::ostringstream out;
  write_heatmap_csv(out, h);
  CHECK(out.str() == "1,2\n3,4\n");
}

TEST_CASE("to_point carries the sample fields") {
  LabeledSample s;
  s.time = 99;
  s.lat = 1.5;
  s.lon = 2.5;
  s.alt = 7.0;
  s.user = "x";
  const auto p = to_point(s);
  CHECK(p == TrajectoryPoint{99, 1.5, 2.5, 7.0, "x"});
}
