#ifndef FOIL_NN_LSTM_HPP
#define FOIL_NN_LSTM_HPP

#include <vector>

#include "foil/features.hpp"
#include "foil/nn/params.hpp"
#include "foil/rng.hpp"
#include "foil/types.hpp"

namespace foil::nn {

/// How the image vector enters the recurrent classifier.
enum class ImageMode {
  None,           // text only
  AppendToFinal,  // concatenated to the final hidden state
  InitHidden,     // projected into the initial hidden and cell state
};

std::string to_string(ImageMode mode);
ImageMode image_mode_from_string(const std::string& s);

/// Uni-directional LSTM over token indices with a 2-way linear head.
/// Gate pre-activations stack as [input; forget; output; candidate]
/// rows. Padding indices never reach the recurrence: steps run only up
/// to the sequence's effective length.
struct LstmModel {
  Eigen::Index vocab_size = 0;
  Eigen::Index embed_dim = 100;
  Eigen::Index hidden_dim = 200;
  Eigen::Index image_dim = 0;  // 0 when mode == None
  ImageMode mode = ImageMode::None;
  // When true, InitHidden projects the image into the hidden state only
  // and the cell state starts at zero.
  bool init_hidden_only = false;

  ParamLayout layout;
  Vector params;

  int embedding = -1;        // vocab_size x embed_dim
  int wx = -1;               // 4*hidden x embed
  int wh = -1;               // 4*hidden x hidden
  int bg = -1;               // 4*hidden
  int proj_h_w = -1, proj_h_b = -1;  // InitHidden: image -> h0
  int proj_c_w = -1, proj_c_b = -1;  // InitHidden: image -> c0
  int head_w = -1, head_b = -1;      // 2 x head input

  Eigen::Index head_input_dim() const {
    return mode == ImageMode::AppendToFinal ? hidden_dim + image_dim
                                            : hidden_dim;
  }

  static LstmModel create(Eigen::Index vocab_size, ImageMode mode,
                          Eigen::Index image_dim,
                          Eigen::Index embed_dim = 100,
                          Eigen::Index hidden_dim = 200,
                          bool init_hidden_only = false);
};

/// Glorot-uniform weights, zero biases except the forget-gate bias,
/// which starts at 1.
void lstm_init(LstmModel& model, Rng& rng);

/// Logits for one example. `image` must be empty exactly when the model
/// takes no image.
Vector lstm_logits(const LstmModel& model, const TokenSequence& seq,
                   const Vector& image);

/// Cross-entropy for one example, accumulated into `grad` (flat layout,
/// not cleared). Returns the example's loss.
Scalar lstm_loss_grad_accumulate(const LstmModel& model,
                                 const TokenSequence& seq,
                                 const Vector& image, int label,
                                 Vector& grad);

}  // namespace foil::nn

#endif
