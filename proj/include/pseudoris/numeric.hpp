#pragma once

#include <Eigen/Dense>

#include "pseudoris/errors.hpp"

namespace pseudoris {

// Numerically stable softmax with temperature, usable on any dense Eigen
// vector expression.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar temperature) {
  using Scalar = typename Derived::Scalar;
  if (!(temperature > Scalar{0})) {
    throw UsageError("softmax: temperature must be positive");
  }
  Eigen::Vector<Scalar, Eigen::Dynamic> z = v / temperature;
  const Scalar m = z.maxCoeff();
  z = (z.array() - m).exp();
  return z / z.sum();
}

// Dot product of two unit vectors clamped into [0, 1].
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar clamped_cosine(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) {
    throw ShapeError("clamped_cosine: dimension mismatch");
  }
  const Scalar d = a.dot(b);
  return std::min(Scalar{1}, std::max(Scalar{0}, d));
}

}  // namespace pseudoris
