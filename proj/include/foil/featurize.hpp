#ifndef FOIL_FEATURIZE_HPP
#define FOIL_FEATURIZE_HPP

#include <optional>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/features.hpp"
#include "foil/types.hpp"

namespace foil {

enum class TextFeature { None, Bow, Tokens };

std::string to_string(TextFeature text);
TextFeature text_feature_from_string(const std::string& s);

/// What a model consumes on each side. The same record rides along inside
/// saved model files so evaluation rebuilds inputs exactly as trained.
struct FeatureConfig {
  FeatureKind image = FeatureKind::None;
  Source source = Source::Gold;
  TextFeature text = TextFeature::Bow;
  int min_count = 1;
  std::size_t max_len = 20;
  bool standardize = false;

  bool operator==(const FeatureConfig&) const = default;
};

/// Turns examples into model inputs: image vectors on one side, dense
/// bag-of-words or padded token indices on the other. Holds everything
/// the mapping depends on (vocabulary, category inventory, embedding
/// table, standardization statistics), so a fitted featurizer plus an
/// example is always enough to rebuild the exact input.
class Featurizer {
public:
  Featurizer(FeatureConfig config, CategoryInventory inventory,
             Vocabulary vocab, std::optional<Standardizer> image_scaler,
             const EmbeddingTable* embeddings);

  /// Builds the vocabulary from the train split and, when configured,
  /// fits standardization statistics on the train split's image vectors.
  static Featurizer fit(const Corpus& corpus, const FeatureConfig& config,
                        const EmbeddingTable* embeddings);

  const FeatureConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const CategoryInventory& inventory() const { return inventory_; }
  const std::optional<Standardizer>& image_scaler() const {
    return image_scaler_;
  }
  const EmbeddingTable* embeddings() const { return embeddings_; }

  Eigen::Index image_dim() const;
  Eigen::Index text_dim() const;  // bag-of-words width; 0 otherwise
  Eigen::Index mlp_input_dim() const { return image_dim() + text_dim(); }

  /// Image-side vector (standardized when configured). Empty when the
  /// image feature is None.
  Vector image_vector(const ImageRecord& image) const;

  /// Dense bag-of-words for an arbitrary token list.
  Vector bow_dense(const std::vector<std::string>& tokens) const;

  /// Concatenated [image, bag-of-words] input row for the feed-forward
  /// classifier.
  Vector mlp_input(const Example& ex, const ImageRecord& image) const;

  TokenSequence token_sequence(const std::vector<std::string>& tokens) const;

private:
  FeatureConfig config_;
  CategoryInventory inventory_;
  Vocabulary vocab_;
  std::optional<Standardizer> image_scaler_;
  const EmbeddingTable* embeddings_ = nullptr;
};

}  // namespace foil

#endif
