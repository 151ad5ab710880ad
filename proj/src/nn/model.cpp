#include "foil/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "foil/nn/adam.hpp"
#include "foil/nn/ops.hpp"
#include "foil/rng.hpp"

namespace foil::nn {

std::string to_string(Arch arch) {
  switch (arch) {
    case Arch::Mlp: return "mlp";
    case Arch::Lstm: return "lstm";
    case Arch::MmLstm: return "mm-lstm";
  }
  throw NumericError("unreachable arch");
}

Arch arch_from_string(const std::string& s) {
  if (s == "mlp") return Arch::Mlp;
  if (s == "lstm") return Arch::Lstm;
  if (s == "mm-lstm") return Arch::MmLstm;
  throw DataError("unknown model architecture: " + s);
}

namespace {

void validate_combo(Arch arch, const FeatureConfig& fc) {
  switch (arch) {
    case Arch::Mlp:
      if (fc.text == TextFeature::Tokens) {
        throw DataError(
            "the feed-forward classifier takes bag-of-words or image "
            "features, not token sequences");
      }
      break;
    case Arch::Lstm:
    case Arch::MmLstm:
      if (fc.text != TextFeature::Tokens) {
        throw DataError("recurrent classifiers require token features");
      }
      if (arch == Arch::MmLstm && fc.image == FeatureKind::None) {
        throw DataError(
            "mm-lstm initializes its state from the image and requires an "
            "image feature");
      }
      break;
  }
}

ImageMode mode_for(Arch arch, const FeatureConfig& fc) {
  if (arch == Arch::MmLstm) return ImageMode::InitHidden;
  return fc.image == FeatureKind::None ? ImageMode::None
                                       : ImageMode::AppendToFinal;
}

}  // namespace

Vector model_logits(const Model& model, const std::vector<std::string>& tokens,
                    const ImageRecord& image) {
  const Featurizer& fz = model.featurizer;
  if (model.arch == Arch::Mlp) {
    Vector input;
    if (fz.config().text == TextFeature::Bow) {
      Vector img = fz.image_vector(image);
      Vector bow = fz.bow_dense(tokens);
      input.resize(img.size() + bow.size());
      input << img, bow;
    } else {
      input = fz.image_vector(image);
    }
    Matrix row = input.transpose();
    return mlp_logits(model.mlp, row).row(0).transpose();
  }
  return lstm_logits(model.lstm, fz.token_sequence(tokens),
                     fz.image_vector(image));
}

Prediction predict(const Model& model, const Example& ex,
                   const ImageRecord& image) {
  Vector logits = model_logits(model, ex.tokens, image);
  Prediction pred;
  pred.probs = softmax(logits);
  pred.label = pred.probs[1] > pred.probs[0] ? Label::Foil : Label::Real;
  return pred;
}

Scalar foil_probability(const Model& model,
                        const std::vector<std::string>& tokens,
                        const ImageRecord& image) {
  return softmax(model_logits(model, tokens, image))[1];
}

Model train_model(const Corpus& corpus, Arch arch, const FeatureConfig& fc,
                  const TrainConfig& tc, const EmbeddingTable* embeddings,
                  TrainLog* log) {
  validate_combo(arch, fc);
  if (tc.epochs < 1) throw DataError("training needs at least one epoch");
  if (tc.batch_size < 1) throw DataError("batch size must be positive");
  if (tc.val_fraction < 0.0 || tc.val_fraction >= 1.0) {
    throw DataError("validation fraction must lie in [0, 1)");
  }

  Featurizer fz = Featurizer::fit(corpus, fc, embeddings);
  const auto& train = corpus.train();
  if (train.empty()) throw DataError("train split is empty");
  const SplitStats stats = corpus.stats(Split::Train);
  if (stats.n_real == 0 || stats.n_foil == 0) {
    throw DataError("training split contains a single class");
  }

  Model model(arch, fz);
  model.trained_with = tc;
  model.vocab_hash = fz.vocab().hash();

  // One generator drives everything in fixed order: parameter init, the
  // validation split, then each epoch's batch shuffle.
  Rng rng(tc.seed);
  if (arch == Arch::Mlp) {
    model.mlp =
        MlpModel::create(fz.mlp_input_dim(), tc.mlp_hidden1, tc.mlp_hidden2);
    mlp_init(model.mlp, rng);
  } else {
    model.lstm = LstmModel::create(
        static_cast<Eigen::Index>(fz.vocab().size()), mode_for(arch, fc),
        fz.image_dim(), tc.embed_dim, tc.hidden_dim, tc.init_hidden_only);
    lstm_init(model.lstm, rng);
  }
  Vector& params = arch == Arch::Mlp ? model.mlp.params : model.lstm.params;

  const Eigen::Index img_d = fz.image_dim();
  const Eigen::Index txt_d = fz.text_dim();
  const std::size_t n = train.size();

  std::map<std::string, Vector> image_cache;
  auto image_vec = [&](const std::string& image_id) -> const Vector& {
    auto it = image_cache.find(image_id);
    if (it == image_cache.end()) {
      it = image_cache.emplace(image_id, fz.image_vector(corpus.image(image_id)))
               .first;
    }
    return it->second;
  };

  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = train[i].label == Label::Foil ? 1 : 0;
  }

  std::vector<BowVector> bows;
  std::vector<TokenSequence> seqs;
  if (arch == Arch::Mlp) {
    if (txt_d > 0) {
      bows.reserve(n);
      for (const auto& ex : train) bows.push_back(bow_encode(ex.tokens, fz.vocab()));
    }
  } else {
    seqs.reserve(n);
    for (const auto& ex : train) seqs.push_back(fz.token_sequence(ex.tokens));
  }

  using RowRef =
      Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>>;
  auto fill_mlp_row = [&](RowRef row, std::size_t ex_idx) {
    if (img_d > 0) {
      row.head(img_d) = image_vec(train[ex_idx].image_id).transpose();
    }
    if (txt_d > 0) {
      row.segment(img_d, txt_d).setZero();
      for (const auto& [w, c] : bows[ex_idx]) {
        row[img_d + w] = static_cast<Scalar>(c);
      }
    }
  };

  auto predict_is_correct = [&](std::size_t ex_idx) {
    Vector logits;
    if (arch == Arch::Mlp) {
      Matrix row(1, model.mlp.input_dim);
      fill_mlp_row(row.row(0), ex_idx);
      logits = mlp_logits(model.mlp, row).row(0).transpose();
    } else {
      logits = lstm_logits(model.lstm, seqs[ex_idx],
                           model.lstm.mode == ImageMode::None
                               ? Vector(0)
                               : image_vec(train[ex_idx].image_id));
    }
    const int pred = logits[1] > logits[0] ? 1 : 0;
    return pred == labels[ex_idx];
  };

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);
  std::size_t n_val = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * tc.val_fraction));
  n_val = std::min(n_val, n - 1);
  std::vector<std::size_t> val_idx(order.begin(),
                                   order.begin() + static_cast<long>(n_val));
  std::vector<std::size_t> fit_idx(order.begin() + static_cast<long>(n_val),
                                   order.end());
  // With no held-out examples, selection falls back to training accuracy.
  const std::vector<std::size_t>& select_idx = n_val > 0 ? val_idx : fit_idx;

  AdamState adam = AdamState::create(params.size(), tc.learning_rate);
  Vector grad;
  Vector best_params = params;
  Scalar best_acc = -1.0;
  int best_epoch = -1;
  int since_best = 0;
  TrainLog local_log;

  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    rng.shuffle(fit_idx);
    Scalar loss_sum = 0.0;
    for (std::size_t start = 0; start < fit_idx.size();
         start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t stop = std::min(
          fit_idx.size(), start + static_cast<std::size_t>(tc.batch_size));
      const std::size_t bn = stop - start;
      Scalar batch_loss = 0.0;
      if (arch == Arch::Mlp) {
        Matrix inputs(static_cast<Eigen::Index>(bn), model.mlp.input_dim);
        std::vector<int> batch_labels(bn);
        for (std::size_t k = 0; k < bn; ++k) {
          fill_mlp_row(inputs.row(static_cast<Eigen::Index>(k)),
                       fit_idx[start + k]);
          batch_labels[k] = labels[fit_idx[start + k]];
        }
        batch_loss = mlp_loss_grad(model.mlp, inputs, batch_labels, grad);
      } else {
        grad = Vector::Zero(model.lstm.layout.total());
        for (std::size_t k = 0; k < bn; ++k) {
          const std::size_t i = fit_idx[start + k];
          batch_loss += lstm_loss_grad_accumulate(
              model.lstm, seqs[i],
              model.lstm.mode == ImageMode::None
                  ? Vector(0)
                  : image_vec(train[i].image_id),
              labels[i], grad);
        }
        batch_loss /= static_cast<Scalar>(bn);
        grad /= static_cast<Scalar>(bn);
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite training loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(start / tc.batch_size));
      }
      adam_update(params, grad, adam);
      loss_sum += batch_loss * static_cast<Scalar>(bn);
    }

    std::size_t correct = 0;
    for (std::size_t i : select_idx) correct += predict_is_correct(i) ? 1 : 0;
    const Scalar val_acc =
        static_cast<Scalar>(correct) / static_cast<Scalar>(select_idx.size());
    local_log.epochs.push_back(
        {epoch, loss_sum / static_cast<Scalar>(fit_idx.size()), val_acc});

    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_params = params;
      best_epoch = epoch;
      since_best = 0;
    } else {
      since_best += 1;
      if (since_best >= tc.patience) break;
    }
  }

  params = best_params;
  local_log.best_epoch = best_epoch;
  local_log.best_val_accuracy = best_acc;
  if (log != nullptr) *log = std::move(local_log);
  return model;
}

}  // namespace foil::nn
