#pragma once

#include <utility>

#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

template <typename Scalar>
struct MaxPoolCache {
  std::vector<Eigen::MatrixXi> argmax;  // offset within the window
  std::size_t input_length = 0;
  int pool = 1;
};

/// Non-overlapping windows of `pool` positions; trailing positions that do
/// not fill a window are dropped. Ties keep the first index.
template <typename Scalar>
std::pair<Sequence<Scalar>, MaxPoolCache<Scalar>> maxpool1d_forward(const Sequence<Scalar>& input,
                                                                   int pool) {
  if (pool < 1) throw Error(ErrorKind::OutOfRange, "maxpool1d: pool size must be >= 1");
  MaxPoolCache<Scalar> cache;
  cache.input_length = input.size();
  cache.pool = pool;
  const std::size_t out_len = input.size() / static_cast<std::size_t>(pool);
  Sequence<Scalar> out(out_len);
  cache.argmax.resize(out_len);
  for (std::size_t t = 0; t < out_len; ++t) {
    const auto base = t * static_cast<std::size_t>(pool);
    out[t] = input[base];
    cache.argmax[t] = Eigen::MatrixXi::Zero(input[base].rows(), input[base].cols());
    for (int j = 1; j < pool; ++j) {
      const auto& x = input[base + static_cast<std::size_t>(j)];
      for (Eigen::Index c = 0; c < x.cols(); ++c)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
          if (x(r, c) > out[t](r, c)) {
            out[t](r, c) = x(r, c);
            cache.argmax[t](r, c) = j;
          }
    }
  }
  return {std::move(out), std::move(cache)};
}

template <typename Scalar>
Sequence<Scalar> maxpool1d_backward(const MaxPoolCache<Scalar>& cache, const Sequence<Scalar>& upstream) {
  require_shape(upstream.size() == cache.argmax.size(), "maxpool1d_backward: upstream length");
  if (upstream.empty()) return Sequence<Scalar>(cache.input_length);
  const Eigen::Index rows = upstream.front().rows();
  const Eigen::Index cols = upstream.front().cols();
  Sequence<Scalar> grad(cache.input_length, Matrix<Scalar>::Zero(rows, cols));
  for (std::size_t t = 0; t < upstream.size(); ++t) {
    const auto base = t * static_cast<std::size_t>(cache.pool);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r)
        grad[base + static_cast<std::size_t>(cache.argmax[t](r, c))](r, c) += upstream[t](r, c);
  }
  return grad;
}

}  // namespace veclstm::nn
