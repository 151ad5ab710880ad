#ifndef FOIL_NN_MLP_HPP
#define FOIL_NN_MLP_HPP

#include <vector>

#include "foil/nn/params.hpp"
#include "foil/rng.hpp"
#include "foil/types.hpp"

namespace foil::nn {

/// Feed-forward classifier: input -> ReLU(h1) -> ReLU(h2) -> 2 logits.
/// Weight matrices are stored (out x in); class 0 is REAL, class 1 is
/// FOIL.
struct MlpModel {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden1 = 100;
  Eigen::Index hidden2 = 100;

  ParamLayout layout;
  Vector params;

  int w1 = -1, b1 = -1;
  int w2 = -1, b2 = -1;
  int w3 = -1, b3 = -1;

  static MlpModel create(Eigen::Index input_dim, Eigen::Index hidden1 = 100,
                         Eigen::Index hidden2 = 100);
};

/// Glorot-uniform weights, zero biases.
void mlp_init(MlpModel& model, Rng& rng);

/// Logits for a batch of row-vector inputs (n x input_dim -> n x 2).
Matrix mlp_logits(const MlpModel& model, const Matrix& inputs);

/// Mean cross-entropy over the batch plus its gradient in the flat
/// layout. `grad` is resized and overwritten.
Scalar mlp_loss_grad(const MlpModel& model, const Matrix& inputs,
                     const std::vector<int>& labels, Vector& grad);

}  // namespace foil::nn

#endif
