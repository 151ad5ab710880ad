#ifndef FOIL_FEATURES_HPP
#define FOIL_FEATURES_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/types.hpp"

namespace foil {

enum class FeatureKind { Mention, Frequency, Embedding, None };
enum class Source { Gold, Predicted };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& s);
std::string to_string(Source source);
Source source_from_string(const std::string& s);

struct ImageFeature {
  FeatureKind kind = FeatureKind::None;
  Vector values;  // length 0 for None
};

/// Word <-> index map built from the training split only. Index 0 is the
/// unknown slot, index 1 the padding slot; content words start at 2,
/// ordered by descending training frequency with alphabetical ties.
class Vocabulary {
public:
  static constexpr int kUnknownIndex = 0;
  static constexpr int kPadIndex = 1;

  Vocabulary() = default;

  std::size_t size() const { return words_.size(); }
  int index_of(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnknownIndex : it->second;
  }
  const std::string& word_at(int index) const { return words_.at(index); }
  int min_count() const { return min_count_; }

  /// FNV-1a over the ordered word list; pins a model to its vocabulary.
  std::uint64_t hash() const;

  /// Rebuilds a vocabulary from a serialized word list. The list must
  /// start with the unknown and padding slots and contain no duplicates.
  static Vocabulary from_words(std::vector<std::string> words, int min_count);

  friend Vocabulary build_vocab(const std::vector<Example>& train,
                                int min_count);

private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
  int min_count_ = 1;
};

Vocabulary build_vocab(const std::vector<Example>& train, int min_count);

/// Sparse caption representation: vocabulary index -> positive count.
using BowVector = std::map<int, int>;

struct TokenSequence {
  std::vector<int> indices;       // padded to max_len with kPadIndex
  std::size_t original_length = 0;  // before truncation/padding
  std::size_t effective_length() const {
    return std::min(original_length, indices.size());
  }
};

ImageFeature extract_mention(const ImageRecord& image, Source source,
                             std::size_t n_categories);
ImageFeature extract_frequency(const ImageRecord& image, Source source,
                               std::size_t n_categories);

BowVector bow_encode(const std::vector<std::string>& caption,
                     const Vocabulary& vocab);

TokenSequence encode_tokens(const std::vector<std::string>& caption,
                            const Vocabulary& vocab, std::size_t max_len);

/// Precomputed image embeddings: one line per image, id then
/// whitespace-separated decimal reals. All vectors must share one dimension.
class EmbeddingTable {
public:
  static EmbeddingTable load(const std::filesystem::path& path);

  Eigen::Index dimension() const { return dimension_; }
  ImageFeature lookup(const std::string& image_id) const;

private:
  std::map<std::string, Vector> vectors_;
  Eigen::Index dimension_ = 0;
};

ImageFeature load_precomputed_embedding(const std::filesystem::path& path,
                                        const std::string& image_id);

/// Optional per-feature standardization fit on train-split statistics.
struct Standardizer {
  Vector mean;
  Vector stddev;  // entries < 1e-12 are treated as 1 when applying

  static Standardizer fit(const Matrix& rows);
  Vector apply(const Vector& v) const;
};

}  // namespace foil

#endif
