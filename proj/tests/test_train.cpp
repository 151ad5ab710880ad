#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/featurize.hpp"
#include "foil/nn/model.hpp"
#include "foil/tokenize.hpp"
#include "foil/types.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace foil;
using namespace foil::nn;

namespace {

fs::path fresh_dir(const std::string& leaf) {
  fs::path dir = fs::temp_directory_path() / "foilkit-test-train" / leaf;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
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

/// Captions differ only in cat/dog, so bag-of-words presence separates the
/// classes perfectly.
Corpus separable_corpus(std::size_t n_train, std::size_t n_test) {
  const CategoryInventory& inv = CategoryInventory::mscoco();
  const int dog = *inv.id_by_name("dog");

  std::map<std::string, ImageRecord> images;
  std::vector<Example> train;
  std::vector<Example> test;
  auto add = [&](std::vector<Example>& out, const std::string& prefix,
                 std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04zu", prefix.c_str(), k);
    const std::string id = buf;
    images[id] = ImageRecord{id, {{dog, 1}}, std::nullopt};
    const bool foil = k % 2 == 1;
    out.push_back(make_example(id, foil ? "a cat sits" : "a dog sits",
                               foil ? Label::Foil : Label::Real));
  };
  for (std::size_t k = 0; k < n_train; ++k) add(train, "t", k);
  for (std::size_t k = 0; k < n_test; ++k) add(test, "e", k);
  return Corpus(std::move(train), std::move(test), std::move(images), inv,
                PosSubset::Noun);
}

FeatureConfig bow_only() {
  FeatureConfig fc;
  fc.image = FeatureKind::None;
  fc.text = TextFeature::Bow;
  return fc;
}

TrainConfig small_mlp(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 40;
  tc.batch_size = 32;
  tc.learning_rate = 1e-2;
  tc.val_fraction = 0.2;
  tc.patience = 40;
  tc.seed = seed;
  tc.mlp_hidden1 = 8;
  tc.mlp_hidden2 = 8;
  return tc;
}

}  // namespace

TEST_CASE("invalid feature and architecture pairings are rejected") {
  const Corpus corpus = separable_corpus(8, 2);
  TrainConfig tc = small_mlp(1);

  FeatureConfig tokens = bow_only();
  tokens.text = TextFeature::Tokens;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, tokens, tc),
                       doctest::Contains("not token sequences"), DataError);

  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Lstm, bow_only(), tc),
                       doctest::Contains("require token features"), DataError);

  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::MmLstm, tokens, tc),
                       doctest::Contains("requires an image feature"),
                       DataError);
}

TEST_CASE("training configuration is validated") {
  const Corpus corpus = separable_corpus(8, 2);

  TrainConfig tc = small_mlp(1);
  tc.epochs = 0;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, bow_only(), tc),
                       doctest::Contains("at least one epoch"), DataError);

  tc = small_mlp(1);
  tc.batch_size = 0;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, bow_only(), tc),
                       doctest::Contains("batch size must be positive"),
                       DataError);

  tc = small_mlp(1);
  tc.val_fraction = 1.0;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, bow_only(), tc),
                       doctest::Contains("validation fraction"), DataError);

  tc = small_mlp(1);
  tc.val_fraction = -0.01;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, bow_only(), tc),
                       doctest::Contains("validation fraction"), DataError);
}

TEST_CASE("degenerate training splits are rejected") {
  const CategoryInventory& inv = CategoryInventory::mscoco();
  const int dog = *inv.id_by_name("dog");
  std::map<std::string, ImageRecord> images;
  images["i0"] = ImageRecord{"i0", {{dog, 1}}, std::nullopt};

  SUBCASE("empty train split") {
    Corpus corpus({}, {make_example("i0", "a dog sits", Label::Real)}, images,
                  inv, PosSubset::Noun);
    CHECK_THROWS_WITH_AS(
        train_model(corpus, Arch::Mlp, bow_only(), small_mlp(1)),
        doctest::Contains("train split is empty"), DataError);
  }

  SUBCASE("single class") {
    std::vector<Example> train;
    for (int k = 0; k < 6; ++k) {
      train.push_back(make_example("i0", "a dog sits here " + std::to_string(k),
                                   Label::Real));
    }
    Corpus corpus(std::move(train), {}, images, inv, PosSubset::Noun);
    CHECK_THROWS_WITH_AS(
        train_model(corpus, Arch::Mlp, bow_only(), small_mlp(1)),
        doctest::Contains("a single class"), DataError);
  }
}

TEST_CASE("a separable corpus is learned to perfect validation accuracy") {
  const Corpus corpus = separable_corpus(200, 20);
  TrainLog log;
  Model model =
      train_model(corpus, Arch::Mlp, bow_only(), small_mlp(42), nullptr, &log);

  CHECK(log.best_val_accuracy == 1.0);
  REQUIRE(!log.epochs.empty());
  CHECK(log.best_epoch >= 1);
  CHECK(log.best_epoch <= static_cast<int>(log.epochs.size()));

  // Epoch numbers are 1-based and consecutive; losses stay finite.
  Scalar best_seen = -1.0;
  int first_best = -1;
  for (std::size_t i = 0; i < log.epochs.size(); ++i) {
    const EpochLog& e = log.epochs[i];
    CHECK(e.epoch == static_cast<int>(i) + 1);
    CHECK(std::isfinite(e.train_loss));
    if (e.val_accuracy > best_seen) {
      best_seen = e.val_accuracy;
      first_best = e.epoch;
    }
  }
  CHECK(best_seen == log.best_val_accuracy);
  CHECK(first_best == log.best_epoch);

  // The returned model separates the held-out split too.
  std::size_t correct = 0;
  for (const Example& ex : corpus.test()) {
    const Prediction pred = predict(model, ex, corpus.image(ex.image_id));
    CHECK(pred.probs.size() == 2);
    CHECK(pred.probs[0] + pred.probs[1] == doctest::Approx(1.0));
    if (pred.label == ex.label) ++correct;
  }
  CHECK(correct == corpus.test().size());
}

TEST_CASE("the first epoch's mean loss starts near chance") {
  const Corpus corpus = separable_corpus(64, 2);
  TrainConfig tc = small_mlp(5);
  tc.epochs = 1;
  tc.batch_size = 4096;  // one batch, so the logged loss predates any update
  TrainLog log;
  train_model(corpus, Arch::Mlp, bow_only(), tc, nullptr, &log);
  REQUIRE(log.epochs.size() == 1);
  CHECK(std::abs(log.epochs[0].train_loss - std::log(2.0)) < 0.1);
}

TEST_CASE("the same seed reproduces parameters bit for bit") {
  const Corpus corpus = separable_corpus(60, 6);
  TrainConfig tc = small_mlp(77);
  tc.epochs = 6;

  Model a = train_model(corpus, Arch::Mlp, bow_only(), tc);
  Model b = train_model(corpus, Arch::Mlp, bow_only(), tc);
  CHECK((a.mlp.params - b.mlp.params).norm() == 0.0);

  const fs::path dir = fresh_dir("same-seed");
  save_model(a, dir / "a.json");
  save_model(b, dir / "b.json");
  CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));

  tc.seed = 78;
  Model c = train_model(corpus, Arch::Mlp, bow_only(), tc);
  CHECK((a.mlp.params - c.mlp.params).norm() != 0.0);
}

TEST_CASE("early stopping honors the patience bound") {
  const Corpus corpus = separable_corpus(200, 20);
  TrainConfig tc = small_mlp(9);
  tc.epochs = 50;
  tc.patience = 2;
  TrainLog log;
  train_model(corpus, Arch::Mlp, bow_only(), tc, nullptr, &log);

  CHECK(log.best_val_accuracy == 1.0);
  // Training stops once patience epochs pass without strict improvement.
  CHECK(log.epochs.size() <= static_cast<std::size_t>(log.best_epoch) + 2);
  CHECK(log.epochs.size() < 50);
}

TEST_CASE("validation falls back to the fit split when the fraction is zero") {
  const Corpus corpus = separable_corpus(40, 4);
  TrainConfig tc = small_mlp(3);
  tc.val_fraction = 0.0;
  tc.epochs = 15;
  TrainLog log;
  train_model(corpus, Arch::Mlp, bow_only(), tc, nullptr, &log);
  CHECK(log.best_val_accuracy == 1.0);
}

TEST_CASE("a diverging run raises a numeric error") {
  const Corpus corpus = separable_corpus(32, 2);
  TrainConfig tc = small_mlp(2);
  tc.learning_rate = 1e300;
  tc.epochs = 3;
  tc.batch_size = 4096;
  CHECK_THROWS_WITH_AS(train_model(corpus, Arch::Mlp, bow_only(), tc),
                       doctest::Contains("non-finite training loss"),
                       NumericError);
}

TEST_CASE("a trained model round-trips through its file") {
  const Corpus corpus = separable_corpus(60, 10);
  TrainConfig tc = small_mlp(11);
  tc.epochs = 8;
  Model model = train_model(corpus, Arch::Mlp, bow_only(), tc);

  const fs::path dir = fresh_dir("round-trip");
  const fs::path file = dir / "model.json";
  save_model(model, file);
  Model loaded = load_model(file);

  CHECK(loaded.arch == model.arch);
  CHECK(loaded.trained_with == model.trained_with);
  CHECK(loaded.featurizer.config() == model.featurizer.config());
  CHECK(loaded.vocab_hash == model.vocab_hash);
  CHECK((loaded.mlp.params - model.mlp.params).norm() == 0.0);

  for (const Example& ex : corpus.test()) {
    const ImageRecord& image = corpus.image(ex.image_id);
    CHECK(foil_probability(loaded, ex.tokens, image) ==
          foil_probability(model, ex.tokens, image));
  }

  // Saving the loaded model reproduces the file byte for byte.
  save_model(loaded, dir / "again.json");
  CHECK(read_file(file) == read_file(dir / "again.json"));
}

TEST_CASE("corrupted model files are rejected") {
  const Corpus corpus = separable_corpus(20, 2);
  TrainConfig tc = small_mlp(13);
  tc.epochs = 2;
  Model model = train_model(corpus, Arch::Mlp, bow_only(), tc);

  const fs::path dir = fresh_dir("corrupt");
  const fs::path file = dir / "model.json";
  save_model(model, file);
  const nlohmann::json doc = nlohmann::json::parse(read_file(file));

  auto rewrite = [&](const nlohmann::json& tampered) {
    std::ofstream out(dir / "bad.json", std::ios::binary);
    out << tampered.dump(2) << "\n";
  };

  SUBCASE("vocabulary tampering breaks the stored hash") {
    nlohmann::json bad = doc;
    REQUIRE(bad.at("vocab").at("words").size() >= 3);
    bad["vocab"]["words"][2] = "zzz";
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("vocabulary hash mismatch"),
                         DataError);
  }

  SUBCASE("tensor shape mismatch") {
    nlohmann::json bad = doc;
    bad["tensors"][0]["rows"] = 999;
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("does not match the architecture"),
                         DataError);
  }

  SUBCASE("wrong format marker") {
    nlohmann::json bad = doc;
    bad["format"] = "something-else";
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("not a model file"), DataError);
  }

  SUBCASE("unsupported version") {
    nlohmann::json bad = doc;
    bad["version"] = 2;
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("unsupported model file version"),
                         DataError);
  }

  SUBCASE("missing field") {
    nlohmann::json bad = doc;
    bad.erase("train_config");
    rewrite(bad);
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("missing fields"), DataError);
  }

  SUBCASE("not JSON at all") {
    std::ofstream(dir / "bad.json", std::ios::binary) << "not json {";
    CHECK_THROWS_WITH_AS(load_model(dir / "bad.json"),
                         doctest::Contains("not valid JSON"), DataError);
  }
}

TEST_CASE("recurrent training runs end to end deterministically") {
  const Corpus corpus = separable_corpus(60, 6);
  FeatureConfig fc = bow_only();
  fc.text = TextFeature::Tokens;
  fc.max_len = 6;

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 16;
  tc.learning_rate = 1e-2;
  tc.val_fraction = 0.2;
  tc.patience = 3;
  tc.seed = 21;
  tc.embed_dim = 8;
  tc.hidden_dim = 8;

  TrainLog log;
  Model a = train_model(corpus, Arch::Lstm, fc, tc, nullptr, &log);
  CHECK(a.lstm.mode == ImageMode::None);
  CHECK(!log.epochs.empty());
  for (const EpochLog& e : log.epochs) CHECK(std::isfinite(e.train_loss));

  Model b = train_model(corpus, Arch::Lstm, fc, tc);
  CHECK((a.lstm.params - b.lstm.params).norm() == 0.0);

  const Example& ex = corpus.test().front();
  const Prediction pred = predict(a, ex, corpus.image(ex.image_id));
  CHECK(pred.probs[0] + pred.probs[1] == doctest::Approx(1.0));

  const fs::path dir = fresh_dir("lstm-round-trip");
  save_model(a, dir / "lstm.json");
  Model loaded = load_model(dir / "lstm.json");
  CHECK((loaded.lstm.params - a.lstm.params).norm() == 0.0);
  CHECK(foil_probability(loaded, ex.tokens, corpus.image(ex.image_id)) ==
        foil_probability(a, ex.tokens, corpus.image(ex.image_id)));
}

TEST_CASE("the multimodal recurrent model consumes image features") {
  const Corpus corpus = separable_corpus(60, 6);
  FeatureConfig fc;
  fc.image = FeatureKind::Frequency;
  fc.source = Source::Gold;
  fc.text = TextFeature::Tokens;
  fc.max_len = 6;

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.learning_rate = 1e-2;
  tc.val_fraction = 0.2;
  tc.patience = 2;
  tc.seed = 33;
  tc.embed_dim = 6;
  tc.hidden_dim = 6;

  Model model = train_model(corpus, Arch::MmLstm, fc, tc);
  CHECK(model.lstm.mode == ImageMode::InitHidden);

  const Example& ex = corpus.test().front();
  const Scalar p = foil_probability(model, ex.tokens, corpus.image(ex.image_id));
  CHECK(std::isfinite(p));
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
}

TEST_CASE("tied logits predict the unaltered class") {
  const Corpus corpus = separable_corpus(8, 2);
  Featurizer fz = Featurizer::fit(corpus, bow_only(), nullptr);
  Model model(Arch::Mlp, fz);
  model.mlp = MlpModel::create(fz.mlp_input_dim(), 4, 4);
  // All-zero parameters leave the logits tied at zero.
  const Example& ex = corpus.test().front();
  const Prediction pred = predict(model, ex, corpus.image(ex.image_id));
  CHECK(pred.probs[0] == 0.5);
  CHECK(pred.probs[1] == 0.5);
  CHECK(pred.label == Label::Real);
}
