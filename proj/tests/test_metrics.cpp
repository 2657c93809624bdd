#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "support.hpp"
#include "veclstm/error.hpp"
#include "veclstm/metrics.hpp"

using namespace veclstm;
using Eigen::MatrixXd;

namespace {

struct Scored {
  MatrixXd probs;
  std::vector<int> truth;
  std::vector<int> predicted;
};

// Probabilities that agree with the truth most of the time.
Scored scored_sample(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, kNumClasses - 1);
  Scored s;
  s.probs.resize(kNumClasses, n);
  for (int k = 0; k < n; ++k) {
    const int t = cls(rng);
    s.truth.push_back(t);
    for (int c = 0; c < kNumClasses; ++c) s.probs(c, k) = u(rng) + (c == t ? 0.8 : 0.0);
    s.probs.col(k) /= s.probs.col(k).sum();
    Eigen::Index best;
    s.probs.col(k).maxCoeff(&best);
    s.predicted.push_back(static_cast<int>(best));
  }
  return s;
}

std::vector<double> row(const MatrixXd& m, int r) {
  std::vector<double> v;
  for (Eigen::Index k = 0; k < m.cols(); ++k) v.push_back(m(r, k));
  return v;
}

}  // namespace

TEST_CASE("classification metrics match tallies on 200 samples") {
  const Scored s = scored_sample(200, 11);
  const MetricsBundle m = evaluate(s.probs, s.truth);

  CHECK(std::abs(m.accuracy - support::tally_accuracy(s.predicted, s.truth)) < 1e-9);
  const auto cm = support::tally_confusion(s.predicted, s.truth, kNumClasses);
  for (int t = 0; t < kNumClasses; ++t)
    for (int p = 0; p < kNumClasses; ++p) CHECK(m.confusion(t, p) == cm[t][p]);
  CHECK(m.confusion.sum() == 200);
  CHECK(std::abs(m.weighted_f1 - support::formula_weighted_f1(s.predicted, s.truth, kNumClasses)) < 1e-9);

  // Class-code regression errors from the definitions.
  double se = 0, ae = 0;
  for (std::size_t k = 0; k < s.truth.size(); ++k) {
    const double d = s.predicted[k] - s.truth[k];
    se += d * d;
    ae += std::abs(d);
  }
  CHECK(std::abs(m.errors.mse - se / 200) < 1e-9);
  CHECK(std::abs(m.errors.rmse - std::sqrt(se / 200)) < 1e-9);
  CHECK(std::abs(m.errors.mae - ae / 200) < 1e-9);

  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<bool> pos;
    for (int t : s.truth) pos.push_back(t == c);
    REQUIRE(m.class_auc[c].has_value());
    CHECK(std::abs(*m.class_auc[c] - support::all_pairs_auc(row(s.probs, c), pos)) < 1e-9);
  }

  std::vector<double> pooled;
  std::vector<bool> pooled_pos;
  for (int k = 0; k < 200; ++k)
    for (int c = 0; c < kNumClasses; ++c) {
      pooled.push_back(s.probs(c, k));
      pooled_pos.push_back(s.truth[k] == c);
    }
  CHECK(std::abs(m.micro_roc.auc - support::all_pairs_auc(pooled, pooled_pos)) < 1e-9);
}

TEST_CASE("probability regression target") {
  const Scored s = scored_sample(50, 12);
  const MetricsBundle m = evaluate(s.probs, s.truth, RegressionTarget::Probabilities);
  double se = 0;
  for (int k = 0; k < 50; ++k)
    for (int c = 0; c < kNumClasses; ++c) {
      const double d = s.probs(c, k) - (s.truth[k] == c ? 1.0 : 0.0);
      se += d * d;
    }
  CHECK(std::abs(m.errors.mse - se / (50 * kNumClasses)) < 1e-12);
  CHECK(m.regression_target == RegressionTarget::Probabilities);
}

TEST_CASE("roc curve on known cases") {
  const std::vector<std::uint8_t> pos = {1, 1, 0, 0};
  SUBCASE("perfect separation") {
    const std::vector<double> scores = {0.9, 0.8, 0.2, 0.1};
    const RocCurve r = roc_curve(scores, pos);
    CHECK(r.auc == doctest::Approx(1.0));
    CHECK(r.points.front() == std::pair{0.0, 0.0});
    CHECK(r.points.back() == std::pair{1.0, 1.0});
  }
  SUBCASE("inverted scores") {
    const std::vector<double> scores = {0.1, 0.2, 0.8, 0.9};
    CHECK(roc_curve(scores, pos).auc == doctest::Approx(0.0));
  }
  SUBCASE("all ties score one half") {
    const std::vector<double> scores = {0.5, 0.5, 0.5, 0.5};
    const RocCurve r = roc_curve(scores, pos);
    CHECK(r.auc == doctest::Approx(0.5));
    CHECK(r.points.size() == 2);
  }
  SUBCASE("hand-computed partial ordering") {
    // Positives 0.8, 0.4; negatives 0.6, 0.2: 3 of 4 pairs won.
    const std::vector<double> scores = {0.8, 0.4, 0.6, 0.2};
    CHECK(roc_curve(scores, pos).auc == doctest::Approx(0.75));
  }
  SUBCASE("points are monotone") {
    const Scored s = scored_sample(80, 13);
    const RocCurve r = roc_auc(s.probs, s.truth, 2);
    for (std::size_t k = 1; k < r.points.size(); ++k) {
      CHECK(r.points[k].first >= r.points[k - 1].first);
      CHECK(r.points[k].second >= r.points[k - 1].second);
    }
  }
}

TEST_CASE("degenerate classes") {
  const std::vector<double> scores = {0.1, 0.9};
  const std::vector<std::uint8_t> all_pos = {1, 1};
  CHECK_THROWS_AS(roc_curve(scores, all_pos), Error);

  MatrixXd probs = MatrixXd::Constant(kNumClasses, 4, 1.0 / kNumClasses);
  probs(0, 0) = probs(0, 1) = 0.5;
  const std::vector<int> truth = {0, 0, 3, 3};
  const MetricsBundle m = evaluate(probs, truth);
  CHECK(m.class_auc[0].has_value());
  CHECK(m.class_auc[3].has_value());
  CHECK_FALSE(m.class_auc[1].has_value());
  CHECK(m.class_roc[1].points.empty());
}

TEST_CASE("metric input errors") {
  const std::vector<int> a = {0, 1}, b = {0};
  CHECK_THROWS_AS(accuracy(a, b), Error);
  CHECK_THROWS_AS(accuracy(std::vector<int>{}, std::vector<int>{}), Error);
  CHECK_THROWS_AS(confusion(std::vector<int>{9}, std::vector<int>{0}), Error);
  CHECK_THROWS_AS(weighted_f1(ConfusionMatrix::Zero(3, 3)), Error);
  CHECK_THROWS_AS(regression_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("weighted F1 treats empty denominators as zero") {
  // Class 1 is never predicted; class 2 is predicted but absent.
  const std::vector<int> truth = {0, 0, 1, 1};
  const std::vector<int> pred = {0, 0, 2, 2};
  const double f1 = weighted_f1(confusion(pred, truth, 3));
  CHECK(f1 == doctest::Approx(support::formula_weighted_f1(pred, truth, 3)));
  CHECK(f1 == doctest::Approx(0.5));
}

TEST_CASE("csv writers") {
  ConfusionMatrix cm = ConfusionMatrix::Zero(kNumClasses, kNumClasses);
  cm(0, 0) = 3;
  cm(2, 1) = 4;
  std::ostringstream out;
  write_confusion_csv(out, cm);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "true\\predicted,walk,bike,bus,car,taxi,subway,train");
  std::getline(in, line);
  CHECK(line == "walk,3,0,0,0,0,0,0");
  std::getline(in, line);
  std::getline(in, line);
  CHECK(line == "bus,0,4,0,0,0,0,0");

  RocCurve r;
  r.points = {{0.0, 0.0}, {0.5, 1.0}, {1.0, 1.0}};
  std::ostringstream roc;
  write_roc_csv(roc, r);
  CHECK(roc.str() == "fpr,tpr\n0,0\n0.5,1\n1,1\n");
}
