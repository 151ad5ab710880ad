#ifndef FOIL_EVAL_HPP
#define FOIL_EVAL_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/nn/model.hpp"
#include "foil/types.hpp"

namespace foil {

/// Per-class and macro accuracy over one split. The macro (overall)
/// accuracy is defined as the exact mean of the two per-class
/// accuracies, never recomputed from pooled counts.
struct EvalReport {
  /// confusion[true][pred]; index 0 = REAL, 1 = FOIL.
  std::array<std::array<std::size_t, 2>, 2> confusion{{{0, 0}, {0, 0}}};

  std::size_t n_real() const { return confusion[0][0] + confusion[0][1]; }
  std::size_t n_foil() const { return confusion[1][0] + confusion[1][1]; }
  std::size_t n() const { return n_real() + n_foil(); }

  Scalar accuracy_real() const;  // percent
  Scalar accuracy_foil() const;  // percent
  Scalar overall() const {
    return (accuracy_real() + accuracy_foil()) / 2.0;
  }
};

EvalReport evaluate(const nn::Model& model, const Corpus& corpus, Split split);

/// Percent string for 100*p/q at two decimals, rounded half-up with
/// exact integer arithmetic: format_ratio_percent(9604*10000 + 9685*10000,
/// 2*10000*10000) is "96.45".
std::string format_ratio_percent(long long p, long long q);

/// Two-decimal half-up formatting of a non-negative percent value that
/// came from short decimal arithmetic.
std::string format_percent(Scalar percent);

std::string percent_overall(const EvalReport& r);
std::string percent_real(const EvalReport& r);
std::string percent_foil(const EvalReport& r);

/// One ablation grid cell: which features feed which classifier.
struct AblationCell {
  FeatureKind image = FeatureKind::None;
  Source source = Source::Gold;
  TextFeature text = TextFeature::None;
  nn::Arch arch = nn::Arch::Mlp;
};

/// Image-side CSV label: "none", "cnn", "gold-freq", "pred-mention", ...
std::string image_feat_label(const AblationCell& cell);

/// The reference grid: image-only, text-only, and combined rows for both
/// classifier families.
std::vector<AblationCell> default_ablation_grid();

struct AblationRow {
  AblationCell cell;
  std::uint64_t seed = 0;
  bool ok = false;
  EvalReport report;  // valid when ok
  std::string error;  // set when not ok
};

/// Trains and evaluates every cell. Failed cells carry their error
/// instead of stopping the sweep. `jobs` > 1 trains cells concurrently;
/// results are identical to a sequential run.
std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const std::vector<AblationCell>& cells,
                                      const FeatureConfig& base_features,
                                      const nn::TrainConfig& base_train,
                                      const EmbeddingTable* embeddings,
                                      int jobs = 1);

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::filesystem::path& path);

/// Full per-cell records: confusion counts and errors included.
void write_ablation_jsonl(const std::vector<AblationRow>& rows,
                          const std::filesystem::path& path);

}  // namespace foil

#endif
