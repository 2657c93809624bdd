#pragma once

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// Oracles deliberately avoid the library's own helpers.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "veclstm/ingest.hpp"
#include "veclstm/types.hpp"

namespace support {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

/// ||a - n|| / (||a|| + ||n||), or the absolute gap when both are ~0.
inline double relative_error(const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric) {
  const double denom = analytic.norm() + numeric.norm();
  const double diff = (analytic - numeric).norm();
  return denom < 1e-12 ? diff : diff / denom;
}

/// Central differences of loss() with respect to every entry of theta.
template <typename Loss>
Eigen::VectorXd numeric_gradient(Loss&& loss, Eigen::Ref<Eigen::VectorXd> theta, double h = 1e-5) {
  Eigen::VectorXd g(theta.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double saved = theta(k);
    theta(k) = saved + h;
    const double up = loss();
    theta(k) = saved - h;
    const double down = loss();
    theta(k) = saved;
    g(k) = (up - down) / (2.0 * h);
  }
  return g;
}

template <typename M>
Eigen::VectorXd flat(const M& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) v(k++) = m(r, c);
  return v;
}

// ---- vectorization oracle ----

/// Cell of a normalized value by scanning bin edges: the bin i with
/// i/G <= v < (i+1)/G, and v = 1 in the last bin.
inline int scan_bin(double v, int grid) {
  if (v >= 1.0) return grid - 1;
  for (int i = 0; i < grid; ++i)
    if (v >= static_cast<double>(i) / grid && v < static_cast<double>(i + 1) / grid) return i;
  return 0;
}

/// Per-point brute-force COUNT heatmap over min-max normalized coordinates.
inline Eigen::MatrixXd brute_force_heatmap(const std::vector<double>& lat, const std::vector<double>& lon, int grid) {
  double lat_lo = lat[0], lat_hi = lat[0], lon_lo = lon[0], lon_hi = lon[0];
  for (std::size_t k = 0; k < lat.size(); ++k) {
    lat_lo = std::min(lat_lo, lat[k]);
    lat_hi = std::max(lat_hi, lat[k]);
    lon_lo = std::min(lon_lo, lon[k]);
    lon_hi = std::max(lon_hi, lon[k]);
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(grid, grid);
  for (std::size_t k = 0; k < lat.size(); ++k) {
    const double a = lat_hi > lat_lo ? (lat[k] - lat_lo) / (lat_hi - lat_lo) : 0.0;
    const double b = lon_hi > lon_lo ? (lon[k] - lon_lo) / (lon_hi - lon_lo) : 0.0;
    h(scan_bin(a, grid), scan_bin(b, grid)) += 1.0;
  }
  return h;
}

// ---- metric oracles ----

inline double tally_accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  int hits = 0;
  for (std::size_t k = 0; k < truth.size(); ++k)
    if (pred[k] == truth[k]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

inline std::vector<std::vector<long>> tally_confusion(const std::vector<int>& pred, const std::vector<int>& truth,
                                                      int classes) {
  std::vector<std::vector<long>> cm(classes, std::vector<long>(classes, 0));
  for (int t = 0; t < classes; ++t)
    for (int p = 0; p < classes; ++p)
      for (std::size_t k = 0; k < truth.size(); ++k)
        if (truth[k] == t && pred[k] == p) ++cm[t][p];
  return cm;
}

/// Weighted F1 from raw label vectors: per class tp/fp/fn counts, F1 as
/// 2tp / (2tp + fp + fn), weighted by support.
inline double formula_weighted_f1(const std::vector<int>& pred, const std::vector<int>& truth, int classes) {
  double total = 0.0;
  for (int c = 0; c < classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t k = 0; k < truth.size(); ++k) {
      if (pred[k] == c && truth[k] == c) tp += 1;
      if (pred[k] == c && truth[k] != c) fp += 1;
      if (pred[k] != c && truth[k] == c) fn += 1;
    }
    const double f1 = tp > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    total += f1 * (tp + fn);
  }
  return total / static_cast<double>(truth.size());
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half, over every pair.
inline double all_pairs_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    if (!positive[a]) continue;
    for (std::size_t b = 0; b < scores.size(); ++b) {
      if (positive[b]) continue;
      pairs += 1;
      if (scores[a] > scores[b]) wins += 1;
      else if (scores[a] == scores[b]) wins += 0.5;
    }
  }
  return wins / pairs;
}

// ---- fixtures ----

/// Synthetic labeled trajectories: every user belongs to one class and
/// concentrates its fixes in a class-specific cell of its own bounding box
/// (two anchor fixes pin the box). Classes also occupy separate map regions.
inline veclstm::Dataset separable_dataset(std::size_t samples, int classes, std::uint64_t seed,
                                          int users_per_class = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.035, 0.035);
  const int users = classes * users_per_class;
  std::vector<veclstm::ModeTaggedPoint> points;
  points.reserve(samples);
  std::vector<int> emitted(users, 0);
  for (std::size_t k = 0; k < samples; ++k) {
    const int u = static_cast<int>(k % static_cast<std::size_t>(users));
    const int c = u % classes;
    const int n = emitted[u]++;
    double x, y;
    if (n == 0) x = y = 0.0;
    else if (n == 1) x = y = 1.0;
    else {
      x = (1 + (c * 3) % 8 + 0.5) / 10.0 + jitter(rng);
      y = (1 + (c * 5) % 8 + 0.5) / 10.0 + jitter(rng);
    }
    veclstm::TrajectoryPoint p;
    p.user_id = "u" + std::to_string(100 + u);
    p.timestamp = 1'210'000'000 + static_cast<std::int64_t>(u) * 10'000'000 + n * 5;
    p.lat = 39.0 + 0.5 * c + 0.2 * x;
    p.lon = 116.0 + 0.1 * (u / classes) + 0.2 * y;
    p.alt = 50.0 + 10.0 * c;
    points.push_back({p, std::string(veclstm::kLabelNames[static_cast<std::size_t>(c)])});
  }
  return veclstm::build_dataset(points);
}

/// Writes a GeoLife-style tree with two users and returns the number of
/// fixes that fall inside a span with a recognized mode.
struct GeoLifeFixture {
  std::size_t labeled_points = 0;
  std::size_t users = 2;
};

inline std::string plt_header() {
  return "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n0,2,255,My Track,0,0,2,8421376\n0\n";
}

inline std::string label_time(std::int64_t ts) {
  const std::time_t t = static_cast<std::time_t>(ts);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y/%m/%d %H:%M:%S", &tm);
  return buf;
}

inline GeoLifeFixture write_geolife_fixture(const std::filesystem::path& root, std::uint64_t seed = 1) {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> step(-0.001, 0.001);
  GeoLifeFixture fx;
  struct Span {
    std::int64_t start, end;
    const char* mode;
    bool recognized;
  };
  const std::int64_t base = 1'207'000'000;  // April 2008
  for (int u = 0; u < 2; ++u) {
    const std::string user = u == 0 ? "010" : "020";
    const fs::path dir = root / "Data" / user;
    fs::create_directories(dir / "Trajectory");
    const std::int64_t t0 = base + u * 86400;
    // Fixes every 10 s; two files of 60 fixes each.
    const std::vector<Span> spans = {
        {t0 + 0, t0 + 200, u == 0 ? "walk" : "bus", true},
        {t0 + 300, t0 + 450, "Car", true},
        {t0 + 600, t0 + 700, "run", false},
        {t0 + 800, t0 + 1000, u == 0 ? "subway" : "taxi", true},
    };
    std::ofstream labels(dir / "labels.txt");
    labels << "Start Time\tEnd Time\tTransportation Mode\n";
    for (const auto& s : spans) labels << label_time(s.start) << '\t' << label_time(s.end) << '\t' << s.mode << '\n';

    double lat = 39.9 + 0.01 * u, lon = 116.3;
    for (int f = 0; f < 2; ++f) {
      std::ofstream plt(dir / "Trajectory" / (std::to_string(20080401000000LL + f * 1000 + u) + ".plt"));
      plt << plt_header();
      for (int i = 0; i < 60; ++i) {
        const std::int64_t ts = t0 + (f * 60 + i) * 10;
        lat += step(rng);
        lon += step(rng);
        veclstm::TrajectoryPoint p{ts, lat, lon, 150.0, user};
        plt << veclstm::format_plt_row(p) << '\n';
        for (const auto& s : spans)
          if (ts >= s.start && ts <= s.end) {
            if (s.recognized) ++fx.labeled_points;
            break;
          }
      }
    }
  }
  return fx;
}

}  // namespace support
