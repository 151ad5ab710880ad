#ifndef FOIL_NN_MODEL_HPP
#define FOIL_NN_MODEL_HPP

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "foil/featurize.hpp"
#include "foil/nn/lstm.hpp"
#include "foil/nn/mlp.hpp"
#include "foil/types.hpp"

namespace foil::nn {

enum class Arch { Mlp, Lstm, MmLstm };

std::string to_string(Arch arch);
Arch arch_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 30;
  int batch_size = 256;
  Scalar learning_rate = 1e-3;
  double val_fraction = 0.1;
  int patience = 5;
  std::uint64_t seed = 0;
  // Architecture sizes; the defaults are the reference classifier shapes.
  Eigen::Index mlp_hidden1 = 100;
  Eigen::Index mlp_hidden2 = 100;
  Eigen::Index embed_dim = 100;
  Eigen::Index hidden_dim = 200;
  bool init_hidden_only = false;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochLog {
  int epoch = 0;
  Scalar train_loss = 0.0;
  Scalar val_accuracy = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = -1;
  Scalar best_val_accuracy = 0.0;
};

/// A trained classifier plus everything needed to rebuild its inputs.
struct Model {
  Arch arch = Arch::Mlp;
  std::uint64_t vocab_hash = 0;
  TrainConfig trained_with;
  Featurizer featurizer;
  MlpModel mlp;    // active when arch == Mlp
  LstmModel lstm;  // active otherwise

  Model(Arch arch, Featurizer featurizer)
      : arch(arch), featurizer(std::move(featurizer)) {}
};

struct Prediction {
  Vector probs;  // [P(REAL), P(FOIL)], sums to 1
  Label label = Label::Real;
};

Vector model_logits(const Model& model, const std::vector<std::string>& tokens,
                    const ImageRecord& image);

/// Ties go to REAL.
Prediction predict(const Model& model, const Example& ex,
                   const ImageRecord& image);

Scalar foil_probability(const Model& model,
                        const std::vector<std::string>& tokens,
                        const ImageRecord& image);

/// Deterministic given the seed: initialization, the validation split, and
/// batch order all come from one generator. Restores the parameters of the
/// best validation epoch.
Model train_model(const Corpus& corpus, Arch arch, const FeatureConfig& fc,
                  const TrainConfig& tc,
                  const EmbeddingTable* embeddings = nullptr,
                  TrainLog* log = nullptr);

void save_model(const Model& model, const std::filesystem::path& path);

/// `embeddings` must outlive the model when its features need one.
Model load_model(const std::filesystem::path& path,
                 const EmbeddingTable* embeddings = nullptr);

}  // namespace foil::nn

#endif
