#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/eval.hpp"
#include "foil/featurize.hpp"
#include "foil/nn/model.hpp"
#include "foil/rng.hpp"
#include "foil/tokenize.hpp"
#include "foil/types.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace foil;
using namespace foil::nn;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "foilkit-test-eval" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

/// Round-half-up percent string via plain quotient/remainder arithmetic,
/// a different route than the production formula.
std::string oracle_percent(long long p, long long q) {
  const long long num = 10000 * p;
  long long cents = num / q;
  if (2 * (num % q) >= q) cents += 1;
  std::ostringstream out;
  out << cents / 100 << '.' << (cents % 100) / 10 << (cents % 100) % 10;
  return out.str();
}

Example make_example(const std::string& image_id, const std::string& caption,
                     Label label) {
  Example ex;
  ex.image_id = image_id;
  ex.tokens = tokenize(caption);
  ex.label = label;
  if (label == Label::Foil) {
    ex.foil_word = "cat";
    ex.original_word = "dog";
  }
  return ex;
}

Corpus two_class_corpus(std::size_t n_test_real, std::size_t n_test_foil) {
  const CategoryInventory& inv = CategoryInventory::mscoco();
  const int dog = *inv.id_by_name("dog");
  std::map<std::string, ImageRecord> images;
  std::vector<Example> train;
  std::vector<Example> test;
  std::size_t next = 0;
  auto add = [&](std::vector<Example>& out, Label label) {
    const std::string id = "i" + std::to_string(next++);
    images[id] = ImageRecord{id, {{dog, 1}}, std::nullopt};
    out.push_back(make_example(
        id, label == Label::Real ? "a dog sits" : "a cat sits", label));
  };
  for (int k = 0; k < 8; ++k) add(train, k % 2 == 0 ? Label::Real : Label::Foil);
  for (std::size_t k = 0; k < n_test_real; ++k) add(test, Label::Real);
  for (std::size_t k = 0; k < n_test_foil; ++k) add(test, Label::Foil);
  return Corpus(std::move(train), std::move(test), std::move(images), inv,
                PosSubset::Noun);
}

/// All-zero parameters tie every logit, so the model predicts REAL always.
Model always_real_model(const Corpus& corpus) {
  FeatureConfig fc;
  fc.image = FeatureKind::None;
  fc.text = TextFeature::Bow;
  Featurizer fz = Featurizer::fit(corpus, fc, nullptr);
  Model model(Arch::Mlp, fz);
  model.mlp = MlpModel::create(fz.mlp_input_dim(), 4, 4);
  model.vocab_hash = fz.vocab().hash();
  return model;
}

}  // namespace

TEST_CASE("the macro accuracy is the exact mean of the per-class accuracies") {
  Rng rng(404);
  for (int trial = 0; trial < 1000; ++trial) {
    EvalReport r;
    r.confusion[0][0] = rng.below(400) + 1;
    r.confusion[0][1] = rng.below(400);
    r.confusion[1][0] = rng.below(400);
    r.confusion[1][1] = rng.below(400) + 1;

    const Scalar ar = 100.0 * static_cast<Scalar>(r.confusion[0][0]) /
                      static_cast<Scalar>(r.confusion[0][0] + r.confusion[0][1]);
    const Scalar af = 100.0 * static_cast<Scalar>(r.confusion[1][1]) /
                      static_cast<Scalar>(r.confusion[1][0] + r.confusion[1][1]);
    CHECK(r.accuracy_real() == ar);
    CHECK(r.accuracy_foil() == af);
    CHECK(r.overall() == (ar + af) / 2.0);

    const long long cr = static_cast<long long>(r.confusion[0][0]);
    const long long cf = static_cast<long long>(r.confusion[1][1]);
    const long long nr = static_cast<long long>(r.n_real());
    const long long nf = static_cast<long long>(r.n_foil());
    CHECK(percent_real(r) == oracle_percent(cr, nr));
    CHECK(percent_foil(r) == oracle_percent(cf, nf));
    CHECK(percent_overall(r) == oracle_percent(cr * nf + cf * nr, 2 * nr * nf));
    // The float path agrees with the exact integer path on these ratios.
    CHECK(format_percent(r.overall()) == percent_overall(r));
  }
}

TEST_CASE("percent formatting rounds half-up at two decimals") {
  CHECK(format_ratio_percent(1, 2) == "50.00");
  CHECK(format_ratio_percent(1, 3) == "33.33");
  CHECK(format_ratio_percent(2, 3) == "66.67");
  CHECK(format_ratio_percent(1, 8) == "12.50");
  CHECK(format_ratio_percent(1, 800) == "0.13");  // 0.125 rounds up
  CHECK(format_ratio_percent(3, 8000) == "0.04");
  CHECK(format_ratio_percent(0, 7) == "0.00");
  CHECK(format_ratio_percent(7, 7) == "100.00");
  // Averaging 96.04 and 96.85 lands on 96.445, which rounds to 96.45.
  CHECK(format_ratio_percent(9604 * 10000LL + 9685 * 10000LL,
                             2 * 10000LL * 10000LL) == "96.45");

  CHECK(format_percent(96.445) == "96.45");
  CHECK(format_percent(0.005) == "0.01");
  CHECK(format_percent(99.995) == "100.00");
  CHECK(format_percent(0.0) == "0.00");
  CHECK(format_percent(50.0) == "50.00");

  CHECK_THROWS_AS(format_ratio_percent(1, 0), DataError);
  CHECK_THROWS_AS(format_ratio_percent(-1, 5), DataError);
  CHECK_THROWS_AS(format_percent(-0.5), DataError);
}

TEST_CASE("float formatting matches integer rounding on the thousandths grid") {
  for (long long i = 0; i <= 100000; ++i) {
    const Scalar v = static_cast<Scalar>(i) * 0.001;
    long long cents = i / 10;
    if (i % 10 >= 5) cents += 1;
    std::ostringstream expect;
    expect << cents / 100 << '.' << (cents % 100) / 10 << (cents % 100) % 10;
    REQUIRE(format_percent(v) == expect.str());
  }
}

TEST_CASE("accuracies over an empty class are refused") {
  EvalReport r;
  r.confusion[1][1] = 5;
  CHECK_THROWS_WITH_AS(r.accuracy_real(), doctest::Contains("no REAL"),
                       DataError);
  r = EvalReport{};
  r.confusion[0][0] = 5;
  CHECK_THROWS_WITH_AS(r.accuracy_foil(), doctest::Contains("no FOIL"),
                       DataError);
}

TEST_CASE("evaluation counts predictions into the confusion matrix") {
  const Corpus corpus = two_class_corpus(7, 5);
  const Model model = always_real_model(corpus);

  const EvalReport r = evaluate(model, corpus, Split::Test);
  CHECK(r.confusion[0][0] == 7);
  CHECK(r.confusion[0][1] == 0);
  CHECK(r.confusion[1][0] == 5);
  CHECK(r.confusion[1][1] == 0);
  CHECK(r.n() == 12);
  CHECK(r.accuracy_real() == 100.0);
  CHECK(r.accuracy_foil() == 0.0);
  CHECK(r.overall() == 50.0);
  CHECK(percent_overall(r) == "50.00");
}

TEST_CASE("evaluation guards its inputs") {
  const Corpus corpus = two_class_corpus(3, 3);
  const Model model = always_real_model(corpus);

  SUBCASE("empty split") {
    const CategoryInventory& inv = CategoryInventory::mscoco();
    const int dog = *inv.id_by_name("dog");
    std::map<std::string, ImageRecord> images;
    images["i0"] = ImageRecord{"i0", {{dog, 1}}, std::nullopt};
    Corpus empty_test({make_example("i0", "a dog sits", Label::Real)}, {},
                      images, inv, PosSubset::Noun);
    CHECK_THROWS_WITH_AS(evaluate(model, empty_test, Split::Test),
                         doctest::Contains("split is empty"), DataError);
  }

  SUBCASE("single-class split") {
    const Corpus lopsided = two_class_corpus(4, 0);
    CHECK_THROWS_WITH_AS(evaluate(model, lopsided, Split::Test),
                         doctest::Contains("lacks one of the classes"),
                         DataError);
  }

  SUBCASE("category inventory mismatch") {
    CategoryInventory other(
        {{0, "dog", "animal", 18}, {1, "cat", "animal", 17}});
    std::map<std::string, ImageRecord> images;
    images["x0"] = ImageRecord{"x0", {{0, 1}}, std::nullopt};
    images["x1"] = ImageRecord{"x1", {{0, 1}}, std::nullopt};
    Corpus mismatched({make_example("x0", "a dog sits", Label::Real)},
                      {make_example("x1", "a cat sits", Label::Foil)}, images,
                      other, PosSubset::Noun);
    CHECK_THROWS_WITH_AS(evaluate(model, mismatched, Split::Test),
                         doctest::Contains("categories do not match"),
                         DataError);
  }
}

TEST_CASE("ablation cells carry their own labels") {
  CHECK(image_feat_label({FeatureKind::None, Source::Gold, TextFeature::Bow,
                          Arch::Mlp}) == "none");
  CHECK(image_feat_label({FeatureKind::Embedding, Source::Gold,
                          TextFeature::None, Arch::Mlp}) == "cnn");
  CHECK(image_feat_label({FeatureKind::Frequency, Source::Gold,
                          TextFeature::None, Arch::Mlp}) == "gold-freq");
  CHECK(image_feat_label({FeatureKind::Mention, Source::Predicted,
                          TextFeature::None, Arch::Mlp}) == "pred-mention");

  const auto grid = default_ablation_grid();
  CHECK(grid.size() == 8);
  std::size_t n_lstm = 0;
  for (const auto& cell : grid) {
    if (cell.arch == Arch::Lstm) {
      ++n_lstm;
      CHECK(cell.text == TextFeature::Tokens);
    } else {
      CHECK(cell.text != TextFeature::Tokens);
    }
  }
  CHECK(n_lstm == 3);
}

TEST_CASE("the ablation sweep trains every cell and survives failures") {
  const Corpus corpus = two_class_corpus(6, 6);

  FeatureConfig base;
  base.text = TextFeature::Bow;
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 8;
  tc.learning_rate = 1e-2;
  tc.val_fraction = 0.25;
  tc.patience = 4;
  tc.seed = 5;
  tc.mlp_hidden1 = 6;
  tc.mlp_hidden2 = 6;
  tc.embed_dim = 4;
  tc.hidden_dim = 4;

  const std::vector<AblationCell> cells = {
      {FeatureKind::None, Source::Gold, TextFeature::Bow, Arch::Mlp},
      {FeatureKind::Frequency, Source::Gold, TextFeature::None, Arch::Mlp},
      {FeatureKind::Frequency, Source::Gold, TextFeature::Bow, Arch::Mlp},
      // No embedding table is supplied, so this cell must fail in place.
      {FeatureKind::Embedding, Source::Gold, TextFeature::Bow, Arch::Mlp},
  };

  const auto rows = run_ablation(corpus, cells, base, tc, nullptr);
  REQUIRE(rows.size() == 4);
  for (std::size_t i = 0; i < 3; ++i) {
    CAPTURE(i);
    CHECK(rows[i].ok);
    CHECK(rows[i].error.empty());
    CHECK(rows[i].report.n() == corpus.test().size());
    CHECK(rows[i].seed == tc.seed);
  }
  CHECK(!rows[3].ok);
  CHECK(rows[3].error.find("embedding") != std::string::npos);

  SUBCASE("parallel execution gives identical results") {
    const auto par = run_ablation(corpus, cells, base, tc, nullptr, 3);
    REQUIRE(par.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CAPTURE(i);
      CHECK(par[i].ok == rows[i].ok);
      CHECK(par[i].error == rows[i].error);
      CHECK(par[i].report.confusion == rows[i].report.confusion);
    }
  }

  SUBCASE("jobs must be positive") {
    CHECK_THROWS_AS(run_ablation(corpus, cells, base, tc, nullptr, 0),
                    DataError);
  }
}

TEST_CASE("ablation reports serialize to CSV and JSONL") {
  AblationRow ok_row;
  ok_row.cell = {FeatureKind::Frequency, Source::Gold, TextFeature::Bow,
                 Arch::Mlp};
  ok_row.seed = 7;
  ok_row.ok = true;
  ok_row.report.confusion = {{{96, 4}, {3, 97}}};

  AblationRow bad_row;
  bad_row.cell = {FeatureKind::Embedding, Source::Gold, TextFeature::None,
                  Arch::Mlp};
  bad_row.seed = 7;
  bad_row.ok = false;
  bad_row.error = "no embedding file";

  const fs::path dir = fresh_dir("serialize");

  SUBCASE("CSV") {
    write_ablation_csv({ok_row, bad_row}, dir / "grid.csv");
    const std::string expect =
        "image_feat,text_feat,classifier,overall,real,foil,n,seed\n"
        "gold-freq,bow,mlp,96.50,96.00,97.00,200,7\n"
        "cnn,none,mlp,,,,0,7\n";
    CHECK(read_file(dir / "grid.csv") == expect);
  }

  SUBCASE("JSONL") {
    write_ablation_jsonl({ok_row, bad_row}, dir / "grid.jsonl");
    std::ifstream in(dir / "grid.jsonl");
    std::string line;
    REQUIRE(std::getline(in, line));
    nlohmann::json first = nlohmann::json::parse(line);
    CHECK(first.at("ok").get<bool>());
    CHECK(first.at("image_feat").get<std::string>() == "gold-freq");
    CHECK(first.at("overall").get<double>() == doctest::Approx(96.5));
    CHECK(first.at("confusion").at("real_as_foil").get<int>() == 4);
    CHECK(first.at("n").get<int>() == 200);

    REQUIRE(std::getline(in, line));
    nlohmann::json second = nlohmann::json::parse(line);
    CHECK(!second.at("ok").get<bool>());
    CHECK(second.at("error").get<std::string>() == "no embedding file");
    REQUIRE(!std::getline(in, line));
  }
}
