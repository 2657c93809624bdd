#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "veclstm/error.hpp"

namespace veclstm::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Ordered positions (time steps or sequence positions); each entry is a
/// features x batch matrix, one column per sample.
template <typename Scalar>
using Sequence = std::vector<Matrix<Scalar>>;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* where) {
  if (!m.allFinite()) throw Error(ErrorKind::NonFinite, std::string("non-finite value in ") + where);
}

inline void require_shape(bool ok, const char* where) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, where);
}

}  // namespace veclstm::nn
