#pragma once

#include <cmath>
#include <random>

#include "veclstm/nn/conv1d.hpp"
#include "veclstm/nn/dense.hpp"
#include "veclstm/nn/lstm.hpp"

namespace veclstm::nn {

/// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename Derived, typename Rng>
void glorot_uniform(Eigen::MatrixBase<Derived>& W, double fan_in, double fan_out, Rng& rng) {
  using S = typename Derived::Scalar;
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  // Column-major fill keeps the draw order fixed for a given shape.
  for (Eigen::Index c = 0; c < W.cols(); ++c)
    for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = static_cast<S>(dist(rng));
}

template <typename Scalar, typename Rng>
LstmParams<Scalar> init_lstm(Eigen::Index input_size, Eigen::Index hidden_size, Rng& rng) {
  auto p = LstmParams<Scalar>::zeros(input_size, hidden_size);
  for (auto* W : p.weights())
    glorot_uniform(*W, static_cast<double>(input_size + hidden_size), static_cast<double>(hidden_size), rng);
  return p;
}

template <typename Scalar, typename Rng>
Conv1dParams<Scalar> init_conv1d(Eigen::Index filters, Eigen::Index channels, Eigen::Index width, Rng& rng) {
  auto p = Conv1dParams<Scalar>::zeros(filters, channels, width);
  for (auto& tap : p.taps)
    glorot_uniform(tap, static_cast<double>(channels * width), static_cast<double>(filters * width), rng);
  return p;
}

template <typename Scalar, typename Rng>
DenseParams<Scalar> init_dense(Eigen::Index in, Eigen::Index out, Rng& rng) {
  auto p = DenseParams<Scalar>::zeros(in, out);
  glorot_uniform(p.W, static_cast<double>(in), static_cast<double>(out), rng);
  return p;
}

}  // namespace veclstm::nn
