#ifndef FOIL_NN_OPS_HPP
#define FOIL_NN_OPS_HPP

#include <cmath>

#include "foil/types.hpp"

namespace foil::nn {

inline Matrix relu(const Matrix& z) { return z.cwiseMax(0.0); }

/// Elementwise 1 where z > 0, else 0. The derivative at exactly 0 is taken
/// as 0.
inline Matrix relu_mask(const Matrix& z) {
  return (z.array() > 0.0).cast<Scalar>().matrix();
}

inline Scalar sigmoid(Scalar x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const Scalar e = std::exp(x);
  return e / (1.0 + e);
}

inline Vector sigmoid(const Vector& x) {
  Vector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = sigmoid(x[i]);
  return out;
}

/// Row-wise softmax with max subtraction; finite for logits of any
/// magnitude.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix shifted =
      logits.colwise() - logits.rowwise().maxCoeff();
  Matrix e = shifted.array().exp().matrix();
  return e.array().colwise() / e.rowwise().sum().array();
}

inline Vector softmax(const Vector& logits) {
  Vector shifted = logits.array() - logits.maxCoeff();
  Vector e = shifted.array().exp();
  return e / e.sum();
}

/// Mean cross-entropy of row-wise logits against integer class labels,
/// computed through log-sum-exp so saturated logits stay finite.
inline Scalar cross_entropy_mean(const Matrix& logits,
                                 const std::vector<int>& labels) {
  const Eigen::Index n = logits.rows();
  Scalar total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    const Scalar lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    total += lse - logits(i, labels[static_cast<std::size_t>(i)]);
  }
  return total / static_cast<Scalar>(n);
}

}  // namespace foil::nn

#endif
