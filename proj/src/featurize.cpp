#include "foil/featurize.hpp"

namespace foil {

std::string to_string(TextFeature text) {
  switch (text) {
    case TextFeature::None: return "none";
    case TextFeature::Bow: return "bow";
    case TextFeature::Tokens: return "tokens";
  }
  throw NumericError("unreachable text feature");
}

TextFeature text_feature_from_string(const std::string& s) {
  if (s == "none") return TextFeature::None;
  if (s == "bow") return TextFeature::Bow;
  if (s == "tokens") return TextFeature::Tokens;
  throw DataError("unknown text feature: " + s);
}

namespace {

void validate_config(const FeatureConfig& config,
                     const EmbeddingTable* embeddings) {
  if (config.image == FeatureKind::None && config.text == TextFeature::None) {
    throw DataError("feature configuration selects no features at all");
  }
  if (config.image == FeatureKind::Embedding && embeddings == nullptr) {
    throw DataError(
        "embedding image features require a precomputed embedding file");
  }
  if (config.standardize && config.image != FeatureKind::Frequency &&
      config.image != FeatureKind::Embedding) {
    throw DataError(
        "standardization applies to frequency or embedding image features");
  }
  if (config.max_len == 0 && config.text == TextFeature::Tokens) {
    throw DataError("token features require max_len > 0");
  }
  if (config.min_count < 1) {
    throw DataError("vocabulary min_count must be at least 1");
  }
}

Vector raw_image_vector(const FeatureConfig& config,
                        const CategoryInventory& inventory,
                        const EmbeddingTable* embeddings,
                        const ImageRecord& image) {
  switch (config.image) {
    case FeatureKind::None:
      return Vector(0);
    case FeatureKind::Mention:
      return extract_mention(image, config.source, inventory.size()).values;
    case FeatureKind::Frequency:
      return extract_frequency(image, config.source, inventory.size()).values;
    case FeatureKind::Embedding:
      return embeddings->lookup(image.image_id).values;
  }
  throw NumericError("unreachable feature kind");
}

}  // namespace

Featurizer::Featurizer(FeatureConfig config, CategoryInventory inventory,
                       Vocabulary vocab,
                       std::optional<Standardizer> image_scaler,
                       const EmbeddingTable* embeddings)
    : config_(config),
      inventory_(std::move(inventory)),
      vocab_(std::move(vocab)),
      image_scaler_(std::move(image_scaler)),
      embeddings_(embeddings) {
  validate_config(config_, embeddings_);
}

Featurizer Featurizer::fit(const Corpus& corpus, const FeatureConfig& config,
                           const EmbeddingTable* embeddings) {
  validate_config(config, embeddings);
  Vocabulary vocab = build_vocab(corpus.train(), config.min_count);

  std::optional<Standardizer> scaler;
  if (config.standardize) {
    const auto& train = corpus.train();
    if (train.empty()) {
      throw DataError("cannot fit standardization on an empty train split");
    }
    Vector first = raw_image_vector(config, corpus.categories(), embeddings,
                                    corpus.image(train[0].image_id));
    Matrix rows(static_cast<Eigen::Index>(train.size()), first.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      rows.row(static_cast<Eigen::Index>(i)) =
          raw_image_vector(config, corpus.categories(), embeddings,
                           corpus.image(train[i].image_id))
              .transpose();
    }
    scaler = Standardizer::fit(rows);
  }
  return Featurizer(config, corpus.categories(), std::move(vocab),
                    std::move(scaler), embeddings);
}

Eigen::Index Featurizer::image_dim() const {
  switch (config_.image) {
    case FeatureKind::None:
      return 0;
    case FeatureKind::Mention:
    case FeatureKind::Frequency:
      return static_cast<Eigen::Index>(inventory_.size());
    case FeatureKind::Embedding:
      return embeddings_->dimension();
  }
  throw NumericError("unreachable feature kind");
}

Eigen::Index Featurizer::text_dim() const {
  return config_.text == TextFeature::Bow
             ? static_cast<Eigen::Index>(vocab_.size())
             : 0;
}

Vector Featurizer::image_vector(const ImageRecord& image) const {
  Vector raw = raw_image_vector(config_, inventory_, embeddings_, image);
  if (image_scaler_) return image_scaler_->apply(raw);
  return raw;
}

Vector Featurizer::bow_dense(const std::vector<std::string>& tokens) const {
  Vector dense = Vector::Zero(static_cast<Eigen::Index>(vocab_.size()));
  for (const auto& [index, count] : bow_encode(tokens, vocab_)) {
    dense[index] = static_cast<Scalar>(count);
  }
  return dense;
}

Vector Featurizer::mlp_input(const Example& ex,
                             const ImageRecord& image) const {
  if (config_.text == TextFeature::Tokens) {
    throw DataError("token features feed the recurrent classifier, not the "
                    "feed-forward one");
  }
  Vector img = image_vector(image);
  if (config_.text == TextFeature::None) return img;
  Vector bow = bow_dense(ex.tokens);
  Vector input(img.size() + bow.size());
  input << img, bow;
  return input;
}

TokenSequence Featurizer::token_sequence(
    const std::vector<std::string>& tokens) const {
  return encode_tokens(tokens, vocab_, config_.max_len);
}

}  // namespace foil
