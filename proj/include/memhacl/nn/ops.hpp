#pragma once

#include <stdexcept>

#include "memhacl/types.hpp"

namespace memhacl {

template <class Derived>
auto relu(const Eigen::MatrixBase<Derived>& x) {
  return x.cwiseMax(typename Derived::Scalar(0));
}

// Numerically stable softmax over each row.
template <class Scalar>
Matrix<Scalar> softmax_rows(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out =
      (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
  out.array().colwise() /= out.rowwise().sum().array();
  return out;
}

// Numerically stable softmax over each column.
template <class Scalar>
Matrix<Scalar> softmax_columns(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out =
      (logits.rowwise() - logits.colwise().maxCoeff()).array().exp();
  out.array().rowwise() /= out.colwise().sum().array();
  return out;
}

template <class DerivedU, class DerivedV>
typename DerivedU::Scalar cosine_similarity(
    const Eigen::MatrixBase<DerivedU>& u, const Eigen::MatrixBase<DerivedV>& v) {
  using S = typename DerivedU::Scalar;
  if (u.size() != v.size()) {
    throw std::invalid_argument("cosine similarity needs equal-length vectors");
  }
  const S nu = u.norm();
  const S nv = v.norm();
  if (nu == S(0) || nv == S(0)) {
    throw std::invalid_argument("cosine similarity of a zero-norm vector");
  }
  return u.dot(v) / (nu * nv);
}

}  // namespace memhacl
