#ifndef FOIL_NN_ADAM_HPP
#define FOIL_NN_ADAM_HPP

#include <cmath>

#include "foil/types.hpp"

namespace foil::nn {

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;
  Scalar learning_rate = 1e-3;
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar epsilon = 1e-8;

  static AdamState create(Eigen::Index n, Scalar learning_rate = 1e-3) {
    AdamState s;
    s.m = Vector::Zero(n);
    s.v = Vector::Zero(n);
    s.learning_rate = learning_rate;
    return s;
  }
};

/// One bias-corrected Adam step applied in place to the flat parameter
/// vector.
inline void adam_update(Eigen::Ref<Vector> params, const Vector& grads,
                        AdamState& state) {
  state.step += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
  state.v = state.beta2 * state.v.array() +
            (1.0 - state.beta2) * grads.array().square();
  const Scalar bc1 =
      1.0 - std::pow(state.beta1, static_cast<Scalar>(state.step));
  const Scalar bc2 =
      1.0 - std::pow(state.beta2, static_cast<Scalar>(state.step));
  params.array() -= state.learning_rate * (state.m.array() / bc1) /
                    ((state.v.array() / bc2).sqrt() + state.epsilon);
}

}  // namespace foil::nn

#endif
