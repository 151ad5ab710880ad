#ifndef FOIL_CORPUS_HPP
#define FOIL_CORPUS_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foil/categories.hpp"
#include "foil/types.hpp"

namespace foil {

/// Multiset of dense category ids, stored as id -> count (counts > 0).
using ObjectMultiset = std::map<int, int>;

struct ImageRecord {
  std::string image_id;
  ObjectMultiset gold_objects;
  /// Absent until a detections file has been loaded; operations needing the
  /// Predicted source must fail when this is absent, never fall back to gold.
  std::optional<ObjectMultiset> predicted_objects;

  bool operator==(const ImageRecord&) const = default;
};

struct Example {
  std::string image_id;
  std::vector<std::string> tokens;
  Label label = Label::Real;
  PosSubset pos = PosSubset::Noun;
  std::optional<std::string> foil_word;
  std::optional<std::string> original_word;

  bool operator==(const Example&) const = default;
};

enum class Split { Train, Test };

struct SplitStats {
  std::size_t n_real = 0;
  std::size_t n_foil = 0;
  std::size_t total() const { return n_real + n_foil; }
};

/// Immutable after construction; safe to read from many threads.
class Corpus {
public:
  Corpus(std::vector<Example> train, std::vector<Example> test,
         std::map<std::string, ImageRecord> images,
         CategoryInventory categories, PosSubset pos);

  const std::vector<Example>& train() const { return train_; }
  const std::vector<Example>& test() const { return test_; }
  const std::vector<Example>& split(Split s) const {
    return s == Split::Train ? train_ : test_;
  }
  const std::map<std::string, ImageRecord>& images() const { return images_; }
  const CategoryInventory& categories() const { return categories_; }
  PosSubset pos_subset() const { return pos_; }

  const ImageRecord& image(const std::string& image_id) const;

  SplitStats stats(Split s) const;

  bool operator==(const Corpus& other) const;

private:
  void validate() const;

  std::vector<Example> train_;
  std::vector<Example> test_;
  std::map<std::string, ImageRecord> images_;
  CategoryInventory categories_;
  PosSubset pos_;
};

/// Loads a FOIL-style annotation file plus the MSCOCO instances file that
/// provides images, object annotations, and the category inventory.
///
/// The annotation file either carries top-level "train"/"test" objects (each
/// a {"images","annotations"} document or a path string relative to the
/// file), or a single document whose annotations carry a "split" field.
Corpus load_foil_json(const std::filesystem::path& foil_path,
                      const std::filesystem::path& coco_instances_path);

struct DetectionLoadResult {
  Corpus corpus;
  /// Images that had no detection entry (left with an empty predicted set).
  std::size_t images_without_detections = 0;
  std::size_t detections_kept = 0;
  std::size_t detections_dropped = 0;
};

/// Attaches predicted object multisets from a COCO-results-style detections
/// file: a JSON array of {image_id, category_id, score}. Detections with
/// score below `confidence_threshold` are dropped.
DetectionLoadResult load_detections(const std::filesystem::path& path,
                                    const Corpus& corpus,
                                    double confidence_threshold = 0.5);

/// Writes the canonical form: <dir>/corpus.json (pos subset + categories),
/// <dir>/train.jsonl and <dir>/test.jsonl with one example record per line.
void save_canonical(const Corpus& corpus, const std::filesystem::path& dir);

Corpus load_canonical(const std::filesystem::path& dir);

}  // namespace foil

#endif
