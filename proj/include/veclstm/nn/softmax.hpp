#pragma once

#include <cmath>

#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

/// Column-wise softmax with the column maximum subtracted first.
template <typename Derived>
Matrix<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  require_finite(logits, "softmax logits");
  Matrix<S> probs = logits;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    auto col = probs.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return probs;
}

template <typename Scalar>
struct SoftmaxCrossEntropy {
  Matrix<Scalar> probs;
  Scalar loss;              // mean over the batch
  Matrix<Scalar> gradient;  // d loss / d logits
};

/// Targets are one-hot columns. The loss is averaged over the batch, so the
/// gradient is (probs - target) / batch.
template <typename Scalar>
SoftmaxCrossEntropy<Scalar> softmax_cross_entropy(const Matrix<Scalar>& logits, const Matrix<Scalar>& targets) {
  require_shape(logits.rows() == targets.rows() && logits.cols() == targets.cols(),
                "softmax_cross_entropy: target shape");
  for (Eigen::Index c = 0; c < targets.cols(); ++c) {
    const auto col = targets.col(c);
    const bool binary = ((col.array() == Scalar(0)) || (col.array() == Scalar(1))).all();
    if (!binary || col.sum() != Scalar(1))
      throw Error(ErrorKind::OutOfRange, "softmax_cross_entropy: target is not one-hot");
  }
  SoftmaxCrossEntropy<Scalar> out;
  out.probs = softmax(logits);
  const auto batch = static_cast<Scalar>(logits.cols());
  Scalar total = 0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    Eigen::Index y;
    targets.col(c).maxCoeff(&y);
    // log p_y computed from the shifted logits, which stays finite even
    // when p_y underflows.
    const Scalar shift = logits.col(c).maxCoeff();
    const Scalar lse = std::log((logits.col(c).array() - shift).exp().sum()) + shift;
    total += lse - logits(y, c);
  }
  out.loss = total / batch;
  out.gradient = (out.probs - targets) / batch;
  if (!std::isfinite(out.loss)) throw Error(ErrorKind::NonFinite, "cross-entropy loss");
  return out;
}

}  // namespace veclstm::nn
