#include "foil/eval.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace foil {

Scalar EvalReport::accuracy_real() const {
  if (n_real() == 0) throw DataError("no REAL examples in the evaluation");
  return 100.0 * static_cast<Scalar>(confusion[0][0]) /
         static_cast<Scalar>(n_real());
}

Scalar EvalReport::accuracy_foil() const {
  if (n_foil() == 0) throw DataError("no FOIL examples in the evaluation");
  return 100.0 * static_cast<Scalar>(confusion[1][1]) /
         static_cast<Scalar>(n_foil());
}

EvalReport evaluate(const nn::Model& model, const Corpus& corpus,
                    Split split) {
  const auto& examples = corpus.split(split);
  if (examples.empty()) throw DataError("evaluation split is empty");
  if (!(model.featurizer.inventory() == corpus.categories())) {
    throw DataError("corpus categories do not match the model");
  }
  EvalReport report;
  for (const auto& ex : examples) {
    const nn::Prediction pred =
        nn::predict(model, ex, corpus.image(ex.image_id));
    const int t = ex.label == Label::Foil ? 1 : 0;
    const int p = pred.label == Label::Foil ? 1 : 0;
    report.confusion[t][p] += 1;
  }
  if (report.n_real() == 0 || report.n_foil() == 0) {
    throw DataError("evaluation split lacks one of the classes");
  }
  return report;
}

std::string format_ratio_percent(long long p, long long q) {
  if (q <= 0 || p < 0) throw DataError("percent ratio must be non-negative");
  // cents = round_half_up(10000 * p / q) in exact integer arithmetic.
  const long long cents = (20000 * p + q) / (2 * q);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", cents / 100, cents % 100);
  return buf;
}

std::string format_percent(Scalar percent) {
  if (percent < 0.0) throw DataError("format_percent takes non-negative values");
  // Snapshot at six decimals first so values that are short decimals in
  // intent (96.445 stored as 96.44499999...) round half-up as written.
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", percent);
  long long whole = 0, frac6 = 0;
  std::sscanf(buf, "%lld.%lld", &whole, &frac6);
  long long cents = frac6 / 10000;
  if (frac6 % 10000 >= 5000) cents += 1;
  if (cents >= 100) {
    cents -= 100;
    whole += 1;
  }
  std::snprintf(buf, sizeof buf, "%lld.%02lld", whole, cents);
  return buf;
}

std::string percent_overall(const EvalReport& r) {
  const long long cr = static_cast<long long>(r.confusion[0][0]);
  const long long cf = static_cast<long long>(r.confusion[1][1]);
  const long long nr = static_cast<long long>(r.n_real());
  const long long nf = static_cast<long long>(r.n_foil());
  return format_ratio_percent(cr * nf + cf * nr, 2 * nr * nf);
}

std::string percent_real(const EvalReport& r) {
  return format_ratio_percent(static_cast<long long>(r.confusion[0][0]),
                              static_cast<long long>(r.n_real()));
}

std::string percent_foil(const EvalReport& r) {
  return format_ratio_percent(static_cast<long long>(r.confusion[1][1]),
                              static_cast<long long>(r.n_foil()));
}

std::string image_feat_label(const AblationCell& cell) {
  switch (cell.image) {
    case FeatureKind::None: return "none";
    case FeatureKind::Embedding: return "cnn";
    case FeatureKind::Mention: return to_string(cell.source) + "-mention";
    case FeatureKind::Frequency: return to_string(cell.source) + "-freq";
  }
  throw NumericError("unreachable feature kind");
}

std::vector<AblationCell> default_ablation_grid() {
  using nn::Arch;
  return {
      {FeatureKind::Embedding, Source::Gold, TextFeature::None, Arch::Mlp},
      {FeatureKind::Frequency, Source::Gold, TextFeature::None, Arch::Mlp},
      {FeatureKind::None, Source::Gold, TextFeature::Bow, Arch::Mlp},
      {FeatureKind::Embedding, Source::Gold, TextFeature::Bow, Arch::Mlp},
      {FeatureKind::Frequency, Source::Gold, TextFeature::Bow, Arch::Mlp},
      {FeatureKind::None, Source::Gold, TextFeature::Tokens, Arch::Lstm},
      {FeatureKind::Embedding, Source::Gold, TextFeature::Tokens, Arch::Lstm},
      {FeatureKind::Frequency, Source::Gold, TextFeature::Tokens, Arch::Lstm},
  };
}

std::vector<AblationRow> run_ablation(const Corpus& corpus,
                                      const std::vector<AblationCell>& cells,
                                      const FeatureConfig& base_features,
                                      const nn::TrainConfig& base_train,
                                      const EmbeddingTable* embeddings,
                                      int jobs) {
  if (jobs < 1) throw DataError("jobs must be at least 1");
  std::vector<AblationRow> rows(cells.size());

  auto run_cell = [&](std::size_t i) {
    AblationRow& row = rows[i];
    row.cell = cells[i];
    row.seed = base_train.seed;
    try {
      FeatureConfig fc = base_features;
      fc.image = cells[i].image;
      fc.source = cells[i].source;
      fc.text = cells[i].text;
      if (fc.standardize && fc.image != FeatureKind::Frequency &&
          fc.image != FeatureKind::Embedding) {
        fc.standardize = false;
      }
      nn::Model model =
          nn::train_model(corpus, cells[i].arch, fc, base_train, embeddings);
      row.report = evaluate(model, corpus, Split::Test);
      row.ok = true;
    } catch (const DataError& e) {
      row.error = e.what();
    } catch (const NumericError& e) {
      row.error = e.what();
    }
  };

  if (jobs == 1 || cells.size() <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    return rows;
  }

  std::mutex next_mutex;
  std::size_t next = 0;
  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(next_mutex);
        if (next >= cells.size()) return;
        i = next++;
      }
      run_cell(i);
    }
  };
  std::vector<std::thread> pool;
  const std::size_t n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), cells.size());
  pool.reserve(n_threads);
  for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return rows;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "image_feat,text_feat,classifier,overall,real,foil,n,seed\n";
  for (const auto& row : rows) {
    out << image_feat_label(row.cell) << ',' << to_string(row.cell.text)
        << ',' << to_string(row.cell.arch) << ',';
    if (row.ok) {
      out << percent_overall(row.report) << ',' << percent_real(row.report)
          << ',' << percent_foil(row.report) << ',' << row.report.n();
    } else {
      out << ",,," << 0;
    }
    out << ',' << row.seed << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

void write_ablation_jsonl(const std::vector<AblationRow>& rows,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& row : rows) {
    nlohmann::json rec;
    rec["image_feat"] = image_feat_label(row.cell);
    rec["text_feat"] = to_string(row.cell.text);
    rec["classifier"] = to_string(row.cell.arch);
    rec["seed"] = row.seed;
    if (row.ok) {
      rec["ok"] = true;
      rec["overall"] = row.report.overall();
      rec["real"] = row.report.accuracy_real();
      rec["foil"] = row.report.accuracy_foil();
      rec["n"] = row.report.n();
      rec["confusion"] = {
          {"real_as_real", row.report.confusion[0][0]},
          {"real_as_foil", row.report.confusion[0][1]},
          {"foil_as_real", row.report.confusion[1][0]},
          {"foil_as_foil", row.report.confusion[1][1]},
      };
    } else {
      rec["ok"] = false;
      rec["error"] = row.error;
    }
    out << rec.dump() << "\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace foil
