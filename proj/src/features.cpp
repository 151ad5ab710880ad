#include "foil/features.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace foil {

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mention: return "mention";
    case FeatureKind::Frequency: return "freq";
    case FeatureKind::Embedding: return "cnn";
    case FeatureKind::None: return "none";
  }
  return "none";
}

FeatureKind feature_kind_from_string(const std::string& s) {
  if (s == "mention") return FeatureKind::Mention;
  if (s == "freq") return FeatureKind::Frequency;
  if (s == "cnn") return FeatureKind::Embedding;
  if (s == "none") return FeatureKind::None;
  throw DataError("unknown image feature kind '" + s + "'");
}

std::string to_string(Source source) {
  return source == Source::Gold ? "gold" : "pred";
}

Source source_from_string(const std::string& s) {
  if (s == "gold") return Source::Gold;
  if (s == "pred") return Source::Predicted;
  throw DataError("unknown object source '" + s + "'");
}

namespace {

const ObjectMultiset& object_source(const ImageRecord& image, Source source) {
  if (source == Source::Gold) return image.gold_objects;
  if (!image.predicted_objects) {
    throw DataError("image '" + image.image_id +
                    "' has no predicted objects; load a detections file");
  }
  return *image.predicted_objects;
}

}  // namespace

ImageFeature extract_mention(const ImageRecord& image, Source source,
                             std::size_t n_categories) {
  const auto& objects = object_source(image, source);
  ImageFeature feat{FeatureKind::Mention, Vector::Zero(n_categories)};
  for (const auto& [id, count] : objects) {
    if (count > 0) feat.values[id] = 1.0;
  }
  return feat;
}

ImageFeature extract_frequency(const ImageRecord& image, Source source,
                               std::size_t n_categories) {
  const auto& objects = object_source(image, source);
  ImageFeature feat{FeatureKind::Frequency, Vector::Zero(n_categories)};
  for (const auto& [id, count] : objects) {
    feat.values[id] = static_cast<Scalar>(count);
  }
  return feat;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto& w : words_) mix(w);
  return h;
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words,
                                  int min_count) {
  if (words.size() < 2 || words[0] != "<unk>" || words[1] != "<pad>") {
    throw DataError("vocabulary word list must start with <unk> and <pad>");
  }
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.words_ = std::move(words);
  for (std::size_t i = 0; i < vocab.words_.size(); ++i) {
    auto [it, inserted] =
        vocab.index_.emplace(vocab.words_[i], static_cast<int>(i));
    if (!inserted) {
      throw DataError("vocabulary word list contains a duplicate: " +
                      vocab.words_[i]);
    }
  }
  return vocab;
}

Vocabulary build_vocab(const std::vector<Example>& train, int min_count) {
  std::map<std::string, std::size_t> freq;
  for (const auto& ex : train) {
    for (const auto& tok : ex.tokens) freq[tok] += 1;
  }
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(),
                                                           freq.end());
  // Descending frequency, alphabetical ties.
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  Vocabulary vocab;
  vocab.min_count_ = min_count;
  vocab.words_ = {"<unk>", "<pad>"};
  for (const auto& [word, count] : entries) {
    if (count >= static_cast<std::size_t>(min_count)) {
      vocab.words_.push_back(word);
    }
  }
  for (std::size_t i = 0; i < vocab.words_.size(); ++i) {
    vocab.index_[vocab.words_[i]] = static_cast<int>(i);
  }
  return vocab;
}

BowVector bow_encode(const std::vector<std::string>& caption,
                     const Vocabulary& vocab) {
  BowVector bow;
  for (const auto& word : caption) {
    bow[vocab.index_of(word)] += 1;
  }
  return bow;
}

TokenSequence encode_tokens(const std::vector<std::string>& caption,
                            const Vocabulary& vocab, std::size_t max_len) {
  TokenSequence seq;
  seq.original_length = caption.size();
  seq.indices.assign(max_len, Vocabulary::kPadIndex);
  const std::size_t n = std::min(caption.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    seq.indices[i] = vocab.index_of(caption[i]);
  }
  return seq;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string id;
    ss >> id;
    std::vector<Scalar> values;
    Scalar v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": unparseable embedding value");
    }
    if (values.empty()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": embedding record has no values");
    }
    if (table.dimension_ == 0) {
      table.dimension_ = static_cast<Eigen::Index>(values.size());
    } else if (table.dimension_ != static_cast<Eigen::Index>(values.size())) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": inconsistent embedding dimension (" +
                      std::to_string(values.size()) + " vs " +
                      std::to_string(table.dimension_) + ")");
    }
    Vector vec = Eigen::Map<const Vector>(values.data(), values.size());
    if (!table.vectors_.emplace(id, std::move(vec)).second) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": duplicate embedding for image id '" + id + "'");
    }
  }
  if (table.vectors_.empty()) {
    throw DataError(path.string() + ": empty embedding file");
  }
  return table;
}

ImageFeature EmbeddingTable::lookup(const std::string& image_id) const {
  auto it = vectors_.find(image_id);
  if (it == vectors_.end()) {
    throw DataError("missing embedding for image id '" + image_id + "'");
  }
  return ImageFeature{FeatureKind::Embedding, it->second};
}

ImageFeature load_precomputed_embedding(const std::filesystem::path& path,
                                        const std::string& image_id) {
  return EmbeddingTable::load(path).lookup(image_id);
}

Standardizer Standardizer::fit(const Matrix& rows) {
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  const Matrix centered = rows.rowwise() - s.mean.transpose();
  s.stddev = (centered.array().square().colwise().sum() /
              static_cast<Scalar>(rows.rows()))
                 .sqrt()
                 .matrix()
                 .transpose();
  return s;
}

Vector Standardizer::apply(const Vector& v) const {
  Vector out = v - mean;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (stddev[i] > 1e-12) out[i] /= stddev[i];
  }
  return out;
}

}  // namespace foil
