#pragma once

#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

template <typename Scalar>
struct DenseParams {
  Matrix<Scalar> W;  // out x in
  Vector<Scalar> b;

  static DenseParams zeros(Eigen::Index in, Eigen::Index out) {
    return {Matrix<Scalar>::Zero(out, in), Vector<Scalar>::Zero(out)};
  }

  Eigen::Index inputs() const { return W.cols(); }
  Eigen::Index outputs() const { return W.rows(); }
};

template <typename Scalar>
Matrix<Scalar> dense_forward(const Matrix<Scalar>& x, const DenseParams<Scalar>& p) {
  require_shape(p.W.rows() == p.b.size(), "dense: bias length");
  require_shape(x.rows() == p.W.cols(), "dense: input width");
  Matrix<Scalar> y = p.W * x;
  y.colwise() += p.b;
  return y;
}

/// Accumulates into `grads` and returns the input gradient.
template <typename Scalar>
Matrix<Scalar> dense_backward(const Matrix<Scalar>& x, const DenseParams<Scalar>& p,
                              const Matrix<Scalar>& upstream, DenseParams<Scalar>& grads) {
  require_shape(upstream.rows() == p.W.rows() && upstream.cols() == x.cols(), "dense_backward: upstream");
  grads.W.noalias() += upstream * x.transpose();
  grads.b += upstream.rowwise().sum();
  return p.W.transpose() * upstream;
}

}  // namespace veclstm::nn
