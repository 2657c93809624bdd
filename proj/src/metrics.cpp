#include "veclstm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "veclstm/csv.hpp"
#include "veclstm/error.hpp"

namespace veclstm {

using Eigen::Index;

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorKind::LengthMismatch, what);
}

}  // namespace

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  require_same_length(predicted.size(), truth.size(), "accuracy: lengths differ");
  if (truth.empty()) throw Error(ErrorKind::Empty, "accuracy of no samples");
  std::size_t correct = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) correct += predicted[k] == truth[k];
  return static_cast<double>(correct) / static_cast<double>(truth.size());
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth, int classes) {
  require_same_length(predicted.size(), truth.size(), "confusion: lengths differ");
  ConfusionMatrix cm = ConfusionMatrix::Zero(classes, classes);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < 0 || truth[k] >= classes || predicted[k] < 0 || predicted[k] >= classes)
      throw Error(ErrorKind::OutOfRange, "confusion: label outside class range");
    ++cm(truth[k], predicted[k]);
  }
  return cm;
}

double weighted_f1(const ConfusionMatrix& cm) {
  const auto total = cm.sum();
  if (cm.size() == 0 || total == 0) throw Error(ErrorKind::EmptyMatrix, "weighted_f1 of an empty matrix");
  double score = 0.0;
  for (Index c = 0; c < cm.rows(); ++c) {
    const double tp = static_cast<double>(cm(c, c));
    const double col = static_cast<double>(cm.col(c).sum());
    const double row = static_cast<double>(cm.row(c).sum());
    const double precision = col > 0 ? tp / col : 0.0;
    const double recall = row > 0 ? tp / row : 0.0;
    const double f1 = precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    score += f1 * row / static_cast<double>(total);
  }
  return score;
}

RegressionErrors regression_metrics(std::span<const double> predicted, std::span<const double> truth) {
  require_same_length(predicted.size(), truth.size(), "regression_metrics: lengths differ");
  if (truth.empty()) throw Error(ErrorKind::Empty, "regression_metrics of no samples");
  double se = 0.0, ae = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const double d = predicted[k] - truth[k];
    se += d * d;
    ae += std::abs(d);
  }
  const double n = static_cast<double>(truth.size());
  RegressionErrors e;
  e.mse = se / n;
  e.rmse = std::sqrt(e.mse);
  e.mae = ae / n;
  return e;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  require_same_length(scores.size(), positive.size(), "roc: lengths differ");
  if (scores.empty()) throw Error(ErrorKind::Empty, "roc of no samples");
  const auto n_pos =
      static_cast<double>(std::count_if(positive.begin(), positive.end(), [](auto p) { return p != 0; }));
  const double n_neg = static_cast<double>(scores.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw Error(ErrorKind::DegenerateClass, "roc needs positives and negatives");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.emplace_back(0.0, 0.0);
  double tp = 0, fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    for (; k < order.size() && scores[order[k]] == threshold; ++k) {
      if (positive[order[k]]) tp += 1;
      else fp += 1;
    }
    curve.points.emplace_back(fp / n_neg, tp / n_pos);
  }
  // Trapezoids in raw counts keep the area exact for integer tallies.
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const auto [x0, y0] = curve.points[k - 1];
    const auto [x1, y1] = curve.points[k];
    area += (x1 - x0) * n_neg * (y0 + y1) * n_pos / 2.0;
  }
  curve.auc = area / (n_pos * n_neg);
  return curve;
}

RocCurve roc_auc(const Eigen::MatrixXd& probs, std::span<const int> truth, int cls) {
  require_same_length(static_cast<std::size_t>(probs.cols()), truth.size(), "roc_auc: lengths differ");
  if (cls < 0 || cls >= probs.rows()) throw Error(ErrorKind::OutOfRange, "roc_auc: class index");
  std::vector<double> scores(truth.size());
  std::vector<std::uint8_t> positive(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    scores[k] = probs(cls, static_cast<Index>(k));
    positive[k] = truth[k] == cls;
  }
  return roc_curve(scores, positive);
}

RocCurve micro_average_roc(const Eigen::MatrixXd& probs, std::span<const int> truth) {
  require_same_length(static_cast<std::size_t>(probs.cols()), truth.size(), "micro roc: lengths differ");
  if (truth.empty()) throw Error(ErrorKind::Empty, "micro-average roc of no samples");
  std::vector<double> scores;
  std::vector<std::uint8_t> positive;
  scores.reserve(static_cast<std::size_t>(probs.size()));
  positive.reserve(static_cast<std::size_t>(probs.size()));
  for (std::size_t k = 0; k < truth.size(); ++k)
    for (Index c = 0; c < probs.rows(); ++c) {
      scores.push_back(probs(c, static_cast<Index>(k)));
      positive.push_back(truth[k] == c);
    }
  return roc_curve(scores, positive);
}

MetricsBundle evaluate(const Eigen::MatrixXd& probs, std::span<const int> truth, RegressionTarget target) {
  require_same_length(static_cast<std::size_t>(probs.cols()), truth.size(), "evaluate: lengths differ");
  const auto classes = static_cast<int>(probs.rows());
  std::vector<int> predicted(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) {
    Index best;
    probs.col(static_cast<Index>(k)).maxCoeff(&best);
    predicted[k] = static_cast<int>(best);
  }

  MetricsBundle m;
  m.accuracy = accuracy(predicted, truth);
  m.confusion = confusion(predicted, truth, classes);
  m.weighted_f1 = weighted_f1(m.confusion);
  m.regression_target = target;
  if (target == RegressionTarget::ClassCodes) {
    std::vector<double> p(predicted.begin(), predicted.end()), t(truth.begin(), truth.end());
    m.errors = regression_metrics(p, t);
  } else {
    std::vector<double> p, t;
    for (std::size_t k = 0; k < truth.size(); ++k)
      for (int c = 0; c < classes; ++c) {
        p.push_back(probs(c, static_cast<Index>(k)));
        t.push_back(truth[k] == c ? 1.0 : 0.0);
      }
    m.errors = regression_metrics(p, t);
  }
  for (int c = 0; c < classes; ++c) {
    try {
      m.class_roc.push_back(roc_auc(probs, truth, c));
      m.class_auc.push_back(m.class_roc.back().auc);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateClass) throw;
      m.class_roc.emplace_back();
      m.class_auc.push_back(std::nullopt);
    }
  }
  m.micro_roc = micro_average_roc(probs, truth);
  return m;
}

void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm) {
  out << "true\\predicted";
  for (Index c = 0; c < cm.cols(); ++c)
    out << ',' << (c < kNumClasses && cm.cols() == kNumClasses ? std::string(kLabelNames[static_cast<std::size_t>(c)])
                                                               : std::to_string(c));
  out << '\n';
  for (Index r = 0; r < cm.rows(); ++r) {
    out << (r < kNumClasses && cm.rows() == kNumClasses ? std::string(kLabelNames[static_cast<std::size_t>(r)])
                                                        : std::to_string(r));
    for (Index c = 0; c < cm.cols(); ++c) out << ',' << cm(r, c);
    out << '\n';
  }
}

void write_roc_csv(std::ostream& out, const RocCurve& curve) {
  out << "fpr,tpr\n";
  for (const auto& [fpr, tpr] : curve.points) out << csv::number(fpr) << ',' << csv::number(tpr) << '\n';
}

}  // namespace veclstm
