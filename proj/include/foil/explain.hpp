#ifndef FOIL_EXPLAIN_HPP
#define FOIL_EXPLAIN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/nn/model.hpp"
#include "foil/types.hpp"

namespace foil {

struct KernelConfig {
  std::size_t n_samples = 1000;
  /// Kernel width; values <= 0 select 0.75 * sqrt(d) for d distinct words.
  Scalar sigma = 0.0;
  std::uint64_t seed = 0;
};

struct WordWeight {
  std::string word;
  Scalar weight = 0.0;
};

struct Explanation {
  /// One weight per distinct caption word, in alphabetical order.
  std::vector<WordWeight> weights;
  /// Word with the largest |weight|; alphabetical tie-break.
  std::string top_feature;
  Label predicted = Label::Real;
  /// Weighted R-squared of the surrogate on its samples, clamped to [0,1].
  Scalar fit_quality = 0.0;
};

/// FOIL probability of an arbitrary word list; the explanation target.
using CaptionQuery = std::function<Scalar(const std::vector<std::string>&)>;

/// Local surrogate explanation: samples word-presence masks (duplicates of
/// a word switch together), queries the model on each masked caption,
/// and fits a kernel-weighted linear model over the mask bits.
Explanation lime_explain(const std::vector<std::string>& tokens,
                         const CaptionQuery& query,
                         const KernelConfig& config);

/// Explains the model's FOIL probability for one example; the image side
/// stays fixed. The model must consume text features.
Explanation lime_explain(const nn::Model& model, const Example& ex,
                         const ImageRecord& image, const KernelConfig& config);

struct AuditRecord {
  std::string image_id;
  std::string caption;
  std::string foil_word;
  std::string top_feature;
  bool hit = false;
  Explanation explanation;
};

struct AuditResult {
  std::size_t n_explained = 0;
  std::size_t n_hits = 0;
  std::vector<AuditRecord> records;
  Scalar hit_rate_percent() const {
    return 100.0 * static_cast<Scalar>(n_hits) /
           static_cast<Scalar>(n_explained);
  }
};

/// Explains every correctly classified FOIL example of the test split and
/// counts how often the top feature is the planted foil word (for a
/// multi-word foil, any of its tokens). `limit` > 0 caps how many
/// examples are explained.
AuditResult foil_word_hit_rate(const nn::Model& model, const Corpus& corpus,
                               const KernelConfig& config,
                               std::size_t limit = 0);

void write_audit_jsonl(const AuditResult& audit,
                       const std::filesystem::path& path);

void write_audit_summary(const AuditResult& audit,
                         const std::filesystem::path& path);

}  // namespace foil

#endif
