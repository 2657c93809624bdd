#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "veclstm/types.hpp"

namespace veclstm {

/// Rows are true classes, columns predicted classes.
using ConfusionMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

double accuracy(std::span<const int> predicted, std::span<const int> truth);

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth,
                          int classes = kNumClasses);

/// Support-weighted mean of per-class F1; empty precision/recall
/// denominators count as 0.
double weighted_f1(const ConfusionMatrix& cm);

struct RegressionErrors {
  double rmse = 0.0;
  double mae = 0.0;
  double mse = 0.0;
};

RegressionErrors regression_metrics(std::span<const double> predicted, std::span<const double> truth);

/// What the regression errors are measured over.
enum class RegressionTarget { ClassCodes, Probabilities };

struct RocCurve {
  std::vector<std::pair<double, double>> points;  // (fpr, tpr) from (0,0) to (1,1)
  double auc = 0.0;
};

/// Threshold sweep over distinct scores with trapezoidal area; tied
/// positive/negative pairs earn half credit.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> positive);

/// One-vs-rest curve for `cls`, scored by probs(cls, sample).
RocCurve roc_auc(const Eigen::MatrixXd& probs, std::span<const int> truth, int cls);

/// Every (sample, class) decision pooled into one binary problem.
RocCurve micro_average_roc(const Eigen::MatrixXd& probs, std::span<const int> truth);

struct MetricsBundle {
  double accuracy = 0.0;
  double weighted_f1 = 0.0;
  ConfusionMatrix confusion;
  RegressionErrors errors;
  RegressionTarget regression_target = RegressionTarget::ClassCodes;
  std::vector<std::optional<double>> class_auc;  // empty when the class is degenerate
  std::vector<RocCurve> class_roc;
  RocCurve micro_roc;
};

MetricsBundle evaluate(const Eigen::MatrixXd& probs, std::span<const int> truth,
                       RegressionTarget target = RegressionTarget::ClassCodes);

// Header row, then one row per true class.
void write_confusion_csv(std::ostream& out, const ConfusionMatrix& cm);
// "fpr,tpr" header then one point per row.
void write_roc_csv(std::ostream& out, const RocCurve& curve);

}  // namespace veclstm
