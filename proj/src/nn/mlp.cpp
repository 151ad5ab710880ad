#include "foil/nn/mlp.hpp"

#include <cmath>

#include "foil/nn/ops.hpp"

namespace foil::nn {

MlpModel MlpModel::create(Eigen::Index input_dim, Eigen::Index hidden1,
                          Eigen::Index hidden2) {
  if (input_dim <= 0) {
    throw DataError("mlp requires a positive input dimension");
  }
  MlpModel m;
  m.input_dim = input_dim;
  m.hidden1 = hidden1;
  m.hidden2 = hidden2;
  m.w1 = m.layout.add("w1", hidden1, input_dim);
  m.b1 = m.layout.add("b1", hidden1);
  m.w2 = m.layout.add("w2", hidden2, hidden1);
  m.b2 = m.layout.add("b2", hidden2);
  m.w3 = m.layout.add("w3", 2, hidden2);
  m.b3 = m.layout.add("b3", 2);
  m.params = Vector::Zero(m.layout.total());
  return m;
}

namespace {

void glorot_fill(MatView w, Rng& rng) {
  const Scalar limit =
      std::sqrt(6.0 / static_cast<Scalar>(w.rows() + w.cols()));
  // Row-major fill order so the draw sequence is part of the format.
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      w(r, c) = rng.uniform(-limit, limit);
    }
  }
}

}  // namespace

void mlp_init(MlpModel& model, Rng& rng) {
  model.params.setZero();
  glorot_fill(mat(model.layout, model.params, model.w1), rng);
  glorot_fill(mat(model.layout, model.params, model.w2), rng);
  glorot_fill(mat(model.layout, model.params, model.w3), rng);
}

Matrix mlp_logits(const MlpModel& model, const Matrix& inputs) {
  if (inputs.cols() != model.input_dim) {
    throw DataError("mlp input width mismatch");
  }
  const auto& p = model.params;
  auto w1 = mat(model.layout, p, model.w1);
  auto b1 = vec(model.layout, p, model.b1);
  auto w2 = mat(model.layout, p, model.w2);
  auto b2 = vec(model.layout, p, model.b2);
  auto w3 = mat(model.layout, p, model.w3);
  auto b3 = vec(model.layout, p, model.b3);

  Matrix h1 = relu(((inputs * w1.transpose()).rowwise() + b1.transpose()));
  Matrix h2 = relu(((h1 * w2.transpose()).rowwise() + b2.transpose()));
  return (h2 * w3.transpose()).rowwise() + b3.transpose();
}

Scalar mlp_loss_grad(const MlpModel& model, const Matrix& inputs,
                     const std::vector<int>& labels, Vector& grad) {
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw DataError("mlp batch is empty");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DataError("mlp batch labels do not match inputs");
  }
  const auto& p = model.params;
  auto w1 = mat(model.layout, p, model.w1);
  auto b1 = vec(model.layout, p, model.b1);
  auto w2 = mat(model.layout, p, model.w2);
  auto b2 = vec(model.layout, p, model.b2);
  auto w3 = mat(model.layout, p, model.w3);
  auto b3 = vec(model.layout, p, model.b3);

  Matrix z1 = (inputs * w1.transpose()).rowwise() + b1.transpose();
  Matrix h1 = relu(z1);
  Matrix z2 = (h1 * w2.transpose()).rowwise() + b2.transpose();
  Matrix h2 = relu(z2);
  Matrix logits = (h2 * w3.transpose()).rowwise() + b3.transpose();

  const Scalar loss = cross_entropy_mean(logits, labels);

  Matrix dlogits = softmax_rows(logits);
  for (Eigen::Index i = 0; i < n; ++i) {
    dlogits(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  }
  dlogits /= static_cast<Scalar>(n);

  grad = Vector::Zero(model.layout.total());
  mat(model.layout, grad, model.w3) = dlogits.transpose() * h2;
  vec(model.layout, grad, model.b3) = dlogits.colwise().sum().transpose();

  Matrix dz2 =
      (dlogits * w3).cwiseProduct(relu_mask(z2));
  mat(model.layout, grad, model.w2) = dz2.transpose() * h1;
  vec(model.layout, grad, model.b2) = dz2.colwise().sum().transpose();

  Matrix dz1 = (dz2 * w2).cwiseProduct(relu_mask(z1));
  mat(model.layout, grad, model.w1) = dz1.transpose() * inputs;
  vec(model.layout, grad, model.b1) = dz1.colwise().sum().transpose();

  return loss;
}

}  // namespace foil::nn
