#pragma once

#include <string_view>

#include "veclstm/nn/tensor.hpp"

namespace veclstm::nn {

enum class Activation { Identity, Sigmoid, Tanh, Relu };

constexpr std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
  }
  return "identity";
}

template <typename Derived>
Matrix<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.unaryExpr([](S v) { return S(1) / (S(1) + std::exp(-v)); });
}

template <typename Derived>
Matrix<typename Derived::Scalar> activate(Activation kind, const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  Matrix<S> out;
  switch (kind) {
    case Activation::Identity: out = x; break;
    case Activation::Sigmoid: out = sigmoid(x); break;
    case Activation::Tanh: out = x.array().tanh().matrix(); break;
    case Activation::Relu: out = x.cwiseMax(S(0)); break;
  }
  require_finite(out, "activation");
  return out;
}

/// Derivative evaluated at the pre-activation input x. relu'(0) = 0.
template <typename Derived>
Matrix<typename Derived::Scalar> activation_derivative(Activation kind,
                                                       const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  switch (kind) {
    case Activation::Identity: return Matrix<S>::Ones(x.rows(), x.cols());
    case Activation::Sigmoid: {
      const Matrix<S> s = sigmoid(x);
      return s.array() * (S(1) - s.array());
    }
    case Activation::Tanh: {
      const auto t = x.array().tanh();
      return (S(1) - t * t).matrix();
    }
    case Activation::Relu:
      return x.unaryExpr([](S v) { return v > S(0) ? S(1) : S(0); });
  }
  return Matrix<S>::Ones(x.rows(), x.cols());
}

}  // namespace veclstm::nn
