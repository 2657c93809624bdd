#pragma once

#include <utility>

#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

/// K filters over C_in channels with width k, stored as k taps of K x C_in.
template <typename Scalar>
struct Conv1dParams {
  std::vector<Matrix<Scalar>> taps;
  Vector<Scalar> bias;

  static Conv1dParams zeros(Eigen::Index filters, Eigen::Index channels, Eigen::Index width) {
    Conv1dParams p;
    p.taps.assign(static_cast<std::size_t>(width), Matrix<Scalar>::Zero(filters, channels));
    p.bias = Vector<Scalar>::Zero(filters);
    return p;
  }

  Eigen::Index filters() const { return bias.size(); }
  Eigen::Index channels() const { return taps.empty() ? 0 : taps.front().cols(); }
  Eigen::Index width() const { return static_cast<Eigen::Index>(taps.size()); }
};

template <typename Scalar>
struct Conv1dCache {
  Sequence<Scalar> input;
};

/// Valid cross-correlation with stride 1: out[t] = b + sum_j taps[j] * in[t + j].
template <typename Scalar>
std::pair<Sequence<Scalar>, Conv1dCache<Scalar>> conv1d_forward(const Sequence<Scalar>& input,
                                                               const Conv1dParams<Scalar>& p) {
  const auto k = p.taps.size();
  require_shape(k >= 1 && p.filters() >= 1, "conv1d: empty kernel");
  if (input.size() < k) throw Error(ErrorKind::InputTooShort, "conv1d: input shorter than kernel");
  const Eigen::Index batch = input.front().cols();
  for (const auto& tap : p.taps)
    require_shape(tap.rows() == p.filters() && tap.cols() == p.channels(), "conv1d: tap shape");
  for (const auto& x : input)
    require_shape(x.rows() == p.channels() && x.cols() == batch, "conv1d: input shape");

  Sequence<Scalar> out(input.size() - k + 1);
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t] = p.bias.replicate(1, batch);
    for (std::size_t j = 0; j < k; ++j) out[t].noalias() += p.taps[j] * input[t + j];
  }
  return {std::move(out), Conv1dCache<Scalar>{input}};
}

template <typename Scalar>
struct Conv1dGradients {
  Conv1dParams<Scalar> params;
  Sequence<Scalar> input;
};

template <typename Scalar>
Conv1dGradients<Scalar> conv1d_backward(const Conv1dCache<Scalar>& cache, const Conv1dParams<Scalar>& p,
                                        const Sequence<Scalar>& upstream) {
  const auto k = p.taps.size();
  require_shape(cache.input.size() >= k && upstream.size() == cache.input.size() - k + 1,
                "conv1d_backward: upstream length");
  Conv1dGradients<Scalar> g;
  g.params = Conv1dParams<Scalar>::zeros(p.filters(), p.channels(), p.width());
  g.input.assign(cache.input.size(), Matrix<Scalar>::Zero(p.channels(), cache.input.front().cols()));
  for (std::size_t t = 0; t < upstream.size(); ++t) {
    require_shape(upstream[t].rows() == p.filters(), "conv1d_backward: upstream shape");
    g.params.bias += upstream[t].rowwise().sum();
    for (std::size_t j = 0; j < k; ++j) {
      g.params.taps[j].noalias() += upstream[t] * cache.input[t + j].transpose();
      g.input[t + j].noalias() += p.taps[j].transpose() * upstream[t];
    }
  }
  return g;
}

}  // namespace veclstm::nn
