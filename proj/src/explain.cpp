#include "foil/explain.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "foil/eval.hpp"
#include "foil/rng.hpp"
#include "foil/tokenize.hpp"
#include "json.hpp"

namespace foil {

namespace {

std::vector<std::string> masked_tokens(const std::vector<std::string>& tokens,
                                       const std::map<std::string, int>& slot,
                                       const Eigen::RowVectorXd& mask) {
  std::vector<std::string> kept;
  kept.reserve(tokens.size());
  for (const auto& tok : tokens) {
    if (mask[slot.at(tok)] > 0.5) kept.push_back(tok);
  }
  return kept;
}

}  // namespace

Explanation lime_explain(const std::vector<std::string>& tokens,
                         const CaptionQuery& query,
                         const KernelConfig& config) {
  std::set<std::string> distinct(tokens.begin(), tokens.end());
  const std::size_t d = distinct.size();
  if (d == 0) throw DataError("cannot explain an empty caption");

  const Scalar p_full = query(tokens);
  Explanation expl;
  expl.predicted = p_full > 0.5 ? Label::Foil : Label::Real;

  std::vector<std::string> words(distinct.begin(), distinct.end());
  if (d == 1) {
    expl.weights = {{words[0], p_full}};
    expl.top_feature = words[0];
    expl.fit_quality = 1.0;
    return expl;
  }

  if (config.n_samples < 10 * d) {
    throw DataError(
        "n_samples must be at least 10x the number of distinct words");
  }
  std::map<std::string, int> slot;
  for (std::size_t j = 0; j < d; ++j) slot[words[j]] = static_cast<int>(j);

  const Scalar sigma = config.sigma > 0.0
                           ? config.sigma
                           : 0.75 * std::sqrt(static_cast<Scalar>(d));
  const Eigen::Index n = static_cast<Eigen::Index>(config.n_samples);
  const Eigen::Index dd = static_cast<Eigen::Index>(d);

  Rng rng(config.seed);
  Matrix masks(n, dd);
  masks.row(0).setOnes();  // the unperturbed caption anchors the fit
  for (Eigen::Index k = 1; k < n; ++k) {
    for (;;) {
      for (Eigen::Index j = 0; j < dd; ++j) {
        masks(k, j) = rng.coin(0.5) ? 1.0 : 0.0;
      }
      if (masks.row(k).sum() > 0.0) break;
    }
  }

  Vector y(n);
  y[0] = p_full;
  for (Eigen::Index k = 1; k < n; ++k) {
    y[k] = query(masked_tokens(tokens, slot, masks.row(k)));
  }

  Vector kernel(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar hamming = static_cast<Scalar>(dd) - masks.row(k).sum();
    kernel[k] = std::exp(-(hamming * hamming) / (sigma * sigma));
  }

  Matrix design(n, dd + 1);
  design.col(0).setOnes();
  design.rightCols(dd) = masks;

  Vector root = kernel.array().sqrt();
  Matrix scaled = design.array().colwise() * root.array();
  Vector target = y.array() * root.array();

  Eigen::ColPivHouseholderQR<Matrix> qr(scaled);
  if (qr.rank() < dd + 1) {
    throw DataError(
        "degenerate explanation design matrix; increase n_samples");
  }
  Vector beta = qr.solve(target);

  expl.weights.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    expl.weights.push_back({words[j], beta[static_cast<Eigen::Index>(j) + 1]});
  }
  std::size_t top = 0;
  for (std::size_t j = 1; j < d; ++j) {
    if (std::abs(expl.weights[j].weight) >
        std::abs(expl.weights[top].weight)) {
      top = j;
    }
  }
  expl.top_feature = expl.weights[top].word;

  Vector fitted = design * beta;
  const Scalar w_sum = kernel.sum();
  const Scalar y_mean = kernel.dot(y) / w_sum;
  const Scalar ss_res = (kernel.array() * (y - fitted).array().square()).sum();
  const Scalar ss_tot =
      (kernel.array() * (y.array() - y_mean).square()).sum();
  if (ss_tot > 1e-12) {
    expl.fit_quality = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  } else {
    expl.fit_quality = 1.0;  // constant target: the surrogate fits exactly
  }
  return expl;
}

Explanation lime_explain(const nn::Model& model, const Example& ex,
                         const ImageRecord& image,
                         const KernelConfig& config) {
  if (model.featurizer.config().text == TextFeature::None) {
    throw DataError("model consumes no text features; nothing to explain");
  }
  CaptionQuery query = [&](const std::vector<std::string>& tokens) {
    return nn::foil_probability(model, tokens, image);
  };
  return lime_explain(ex.tokens, query, config);
}

AuditResult foil_word_hit_rate(const nn::Model& model, const Corpus& corpus,
                               const KernelConfig& config, std::size_t limit) {
  if (model.featurizer.config().text == TextFeature::None) {
    throw DataError("model consumes no text features; nothing to explain");
  }
  const auto& test = corpus.test();
  AuditResult audit;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (limit > 0 && audit.n_explained >= limit) break;
    const Example& ex = test[i];
    if (ex.label != Label::Foil) continue;
    const ImageRecord& image = corpus.image(ex.image_id);
    if (nn::predict(model, ex, image).label != Label::Foil) continue;
    if (!ex.foil_word) {
      throw DataError("FOIL example lacks its foil word");
    }

    KernelConfig per_example = config;
    // Stable per-example stream: explanations stay identical however the
    // eligible set is traversed.
    per_example.seed =
        config.seed ^ ((i + 1) * 0x9e3779b97f4a7c15ull);
    Explanation expl = lime_explain(model, ex, image, per_example);

    AuditRecord rec;
    rec.image_id = ex.image_id;
    rec.caption = join_tokens(ex.tokens);
    rec.foil_word = *ex.foil_word;
    rec.top_feature = expl.top_feature;
    // A multi-word foil counts as hit when any of its tokens tops the list.
    const std::vector<std::string> foil_tokens = tokenize(rec.foil_word);
    rec.hit = std::find(foil_tokens.begin(), foil_tokens.end(),
                        expl.top_feature) != foil_tokens.end();
    rec.explanation = std::move(expl);

    audit.n_explained += 1;
    audit.n_hits += rec.hit ? 1 : 0;
    audit.records.push_back(std::move(rec));
  }
  if (audit.n_explained == 0) {
    throw DataError("no correctly classified FOIL examples to audit");
  }
  return audit;
}

void write_audit_jsonl(const AuditResult& audit,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& rec : audit.records) {
    nlohmann::json weights = nlohmann::json::array();
    for (const auto& ww : rec.explanation.weights) {
      weights.push_back({{"word", ww.word}, {"weight", ww.weight}});
    }
    nlohmann::json row = {{"image_id", rec.image_id},
                          {"caption", rec.caption},
                          {"foil_word", rec.foil_word},
                          {"top_feature", rec.top_feature},
                          {"hit", rec.hit},
                          {"predicted", to_string(rec.explanation.predicted)},
                          {"fit_quality", rec.explanation.fit_quality},
                          {"weights", std::move(weights)}};
    out << row.dump() << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_audit_summary(const AuditResult& audit,
                         const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  nlohmann::json doc = {
      {"n_explained", audit.n_explained},
      {"n_hits", audit.n_hits},
      {"hit_rate_percent", audit.hit_rate_percent()},
      {"hit_rate_display",
       format_ratio_percent(static_cast<long long>(audit.n_hits),
                            static_cast<long long>(audit.n_explained))}};
  out << doc.dump(2) << "\n";
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace foil
