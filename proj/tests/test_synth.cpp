#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "foil/corpus.hpp"
#include "foil/synth.hpp"
#include "foil/tokenize.hpp"
#include "foil/types.hpp"

namespace fs = std::filesystem;
using namespace foil;

namespace {

const CategoryInventory& inv() { return CategoryInventory::mscoco(); }

int dense(const std::string& name) {
  auto id = inv().id_by_name(name);
  REQUIRE(id.has_value());
  return *id;
}

Example real_example(const std::string& caption,
                     const std::string& image_id = "img") {
  Example ex;
  ex.image_id = image_id;
  ex.tokens = tokenize(caption);
  ex.label = Label::Real;
  return ex;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

/// Chi-square statistic of observed counts against expected counts.
double chi_square(const std::map<int, int>& observed,
                  const std::map<int, double>& expected) {
  double stat = 0.0;
  for (const auto& [key, exp] : expected) {
    auto it = observed.find(key);
    const double obs = it == observed.end() ? 0.0 : it->second;
    stat += (obs - exp) * (obs - exp) / exp;
  }
  return stat;
}

}  // namespace

TEST_CASE("generation is a pure function of the config") {
  SynthConfig config;
  config.n_images = 30;
  config.seed = 7;
  Corpus a = synth_generate(config);
  Corpus b = synth_generate(config);
  CHECK(a == b);

  fs::path da = fs::temp_directory_path() / "foilkit-test-synth" / "a";
  fs::path db = fs::temp_directory_path() / "foilkit-test-synth" / "b";
  fs::remove_all(da);
  fs::remove_all(db);
  save_canonical(a, da);
  save_canonical(b, db);
  for (const char* f : {"corpus.json", "train.jsonl", "test.jsonl"}) {
    CHECK(read_file(da / f) == read_file(db / f));
  }

  config.seed = 8;
  CHECK_FALSE(a == synth_generate(config));
}

TEST_CASE("train/test images split 2:1 and stay disjoint") {
  SynthConfig config;
  config.n_images = 30;
  config.captions_per_image = 1;
  config.seed = 11;
  Corpus c = synth_generate(config);

  std::set<std::string> train_ids, test_ids;
  for (const auto& ex : c.train()) train_ids.insert(ex.image_id);
  for (const auto& ex : c.test()) test_ids.insert(ex.image_id);
  CHECK(train_ids.size() == 20);
  CHECK(test_ids.size() == 10);
  for (const auto& id : test_ids) CHECK(train_ids.count(id) == 0);

  CHECK(c.stats(Split::Train).total() == 20);
  CHECK(c.stats(Split::Test).total() == 10);
  CHECK(c.images().size() == 30);
}

TEST_CASE("captions_per_image multiplies the split sizes") {
  SynthConfig config;
  config.n_images = 12;
  config.captions_per_image = 3;
  config.seed = 5;
  Corpus c = synth_generate(config);
  CHECK(c.stats(Split::Train).total() == 8 * 3);
  CHECK(c.stats(Split::Test).total() == 4 * 3);
}

TEST_CASE("labels are roughly balanced") {
  SynthConfig config;
  config.n_images = 400;
  config.seed = 3;
  Corpus c = synth_generate(config);
  const auto stats = c.stats(Split::Train);
  const double foil_frac =
      static_cast<double>(stats.n_foil) / static_cast<double>(stats.total());
  CHECK(foil_frac > 0.4);
  CHECK(foil_frac < 0.6);
}

TEST_CASE("every generated FOIL example satisfies the foil contract") {
  SynthConfig config;
  config.n_images = 200;
  config.seed = 19;
  Corpus c = synth_generate(config);

  std::size_t n_foils = 0;
  for (Split s : {Split::Train, Split::Test}) {
    for (const auto& ex : c.split(s)) {
      if (ex.label != Label::Foil) {
        CHECK_FALSE(ex.foil_word.has_value());
        CHECK_FALSE(ex.original_word.has_value());
        continue;
      }
      ++n_foils;
      REQUIRE(ex.foil_word.has_value());
      REQUIRE(ex.original_word.has_value());
      CHECK(*ex.foil_word != *ex.original_word);

      auto foil_id = inv().id_by_name(*ex.foil_word);
      auto orig_id = inv().id_by_name(*ex.original_word);
      REQUIRE(foil_id.has_value());
      REQUIRE(orig_id.has_value());
      CHECK(inv().at(*foil_id).super_category ==
            inv().at(*orig_id).super_category);

      const auto& gold = c.image(ex.image_id).gold_objects;
      CHECK(gold.count(*foil_id) == 0);
      CHECK(gold.count(*orig_id) == 1);
    }
  }
  CHECK(n_foils > 0);
}

TEST_CASE("foiling replaces exactly one mention span") {
  ImageRecord image{"img",
                    {{dense("dog"), 1}, {dense("couch"), 1}},
                    std::nullopt};
  Example real = real_example("a dog on a couch");
  Rng rng(21);

  for (int trial = 0; trial < 200; ++trial) {
    auto foiled = foil_caption(real, image, inv(), rng);
    REQUIRE(foiled.has_value());
    CHECK(foiled->label == Label::Foil);

    // Splicing the foil name back out must recover the original caption.
    const auto orig_span = tokenize(*foiled->original_word);
    const auto foil_span = tokenize(*foiled->foil_word);
    bool recovered = false;
    const auto& ft = foiled->tokens;
    for (std::size_t i = 0; i + foil_span.size() <= ft.size(); ++i) {
      if (!std::equal(foil_span.begin(), foil_span.end(), ft.begin() + i)) {
        continue;
      }
      std::vector<std::string> rebuilt(ft.begin(), ft.begin() + i);
      rebuilt.insert(rebuilt.end(), orig_span.begin(), orig_span.end());
      rebuilt.insert(rebuilt.end(), ft.begin() + i + foil_span.size(),
                     ft.end());
      if (rebuilt == real.tokens) recovered = true;
    }
    CHECK(recovered);
  }
}

TEST_CASE("a single legal candidate is forced") {
  ObjectMultiset gold;
  for (const std::string& name :
       {"bird", "dog", "horse", "sheep", "cow", "elephant", "bear", "zebra",
        "giraffe"}) {
    gold[dense(name)] = 1;
  }
  ImageRecord image{"img", gold, std::nullopt};
  Example real = real_example("a photo of a dog");
  Rng rng(1);
  auto foiled = foil_caption(real, image, inv(), rng);
  REQUIRE(foiled.has_value());
  CHECK(*foiled->foil_word == "cat");
  CHECK(*foiled->original_word == "dog");
}

TEST_CASE("unfoilable captions return nothing") {
  ImageRecord image{"img", {{dense("dog"), 1}}, std::nullopt};
  Rng rng(2);

  SUBCASE("no category mention at all") {
    auto out = foil_caption(real_example("nothing to see here"), image, inv(),
                            rng);
    CHECK_FALSE(out.has_value());
  }
  SUBCASE("every sibling already present in the image") {
    ObjectMultiset gold;
    for (const std::string& name :
         {"bird", "cat", "dog", "horse", "sheep", "cow", "elephant", "bear",
          "zebra", "giraffe"}) {
      gold[dense(name)] = 1;
    }
    ImageRecord full{"img", gold, std::nullopt};
    auto out = foil_caption(real_example("a photo of a dog"), full, inv(), rng);
    CHECK_FALSE(out.has_value());
  }
}

TEST_CASE("candidates exclude words already in the caption") {
  // "cat" is mentioned (though absent from the image), so no dog-site foil
  // may introduce it again, and no cat-site foil may pick the mentioned dog.
  ImageRecord image{"img", {{dense("dog"), 1}}, std::nullopt};
  Example real = real_example("a dog next to a cat");
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    auto foiled = foil_caption(real, image, inv(), rng);
    REQUIRE(foiled.has_value());
    CHECK(*foiled->foil_word != "cat");
    CHECK(*foiled->foil_word != "dog");
  }
}

TEST_CASE("unbiased foil choice is uniform over the candidate set") {
  // Single site with exactly the 9 animal siblings as candidates.
  ImageRecord image{"img", {{dense("dog"), 1}}, std::nullopt};
  Example real = real_example("a photo of a dog");
  Rng rng(29);

  const int n_draws = 9000;
  std::map<int, int> observed;
  for (int i = 0; i < n_draws; ++i) {
    auto foiled = foil_caption(real, image, inv(), rng);
    REQUIRE(foiled.has_value());
    observed[*inv().id_by_name(*foiled->foil_word)] += 1;
  }

  std::map<int, double> expected;
  for (int sib : inv().siblings(dense("dog"))) {
    expected[sib] = n_draws / 9.0;
  }
  REQUIRE(expected.size() == 9);
  // 99.9th percentile of chi-square with 8 degrees of freedom.
  CHECK(chi_square(observed, expected) < 26.12);
}

TEST_CASE("site choice is uniform, then candidate choice within the site") {
  // Two sites: dog (9 animal candidates) and bottle (6 kitchen candidates).
  ImageRecord image{"img",
                    {{dense("dog"), 1}, {dense("bottle"), 1}},
                    std::nullopt};
  Example real = real_example("a dog next to a bottle");
  Rng rng(31);

  const int n_draws = 6000;
  std::map<int, int> observed;
  for (int i = 0; i < n_draws; ++i) {
    auto foiled = foil_caption(real, image, inv(), rng);
    REQUIRE(foiled.has_value());
    observed[*inv().id_by_name(*foiled->foil_word)] += 1;
  }

  std::map<int, double> expected;
  for (int sib : inv().siblings(dense("dog"))) {
    expected[sib] = n_draws / 2.0 / 9.0;
  }
  for (int sib : inv().siblings(dense("bottle"))) {
    expected[sib] = n_draws / 2.0 / 6.0;
  }
  REQUIRE(expected.size() == 15);
  // 99.9th percentile of chi-square with 14 degrees of freedom.
  CHECK(chi_square(observed, expected) < 36.12);
}

TEST_CASE("full bias concentrates foils on the leaky words") {
  SynthConfig config;
  config.n_images = 300;
  config.bias_strength = 1.0;
  config.seed = 13;
  Corpus c = synth_generate(config);

  const auto leaky_names = default_leaky_words(inv());
  REQUIRE(leaky_names.size() == 10);
  CHECK(leaky_names.front() == "airplane");
  const std::set<std::string> leaky(leaky_names.begin(), leaky_names.end());

  std::size_t n_foil = 0, n_leaky = 0;
  for (Split s : {Split::Train, Split::Test}) {
    for (const auto& ex : c.split(s)) {
      if (ex.label != Label::Foil) continue;
      ++n_foil;
      if (leaky.count(*ex.foil_word)) ++n_leaky;
    }
  }
  REQUIRE(n_foil > 50);
  CHECK(n_leaky == n_foil);  // coin(1.0) always prefers the leaky subset
}

TEST_CASE("zero bias leaves the leaky words at their natural share") {
  SynthConfig config;
  config.n_images = 300;
  config.bias_strength = 0.0;
  config.seed = 13;
  Corpus c = synth_generate(config);

  const auto leaky_names = default_leaky_words(inv());
  const std::set<std::string> leaky(leaky_names.begin(), leaky_names.end());
  std::size_t n_foil = 0, n_leaky = 0;
  for (Split s : {Split::Train, Split::Test}) {
    for (const auto& ex : c.split(s)) {
      if (ex.label != Label::Foil) continue;
      ++n_foil;
      if (leaky.count(*ex.foil_word)) ++n_leaky;
    }
  }
  REQUIRE(n_foil > 50);
  // 10 leaky words out of 80 categories: far below half in the unbiased case.
  CHECK(static_cast<double>(n_leaky) < 0.5 * static_cast<double>(n_foil));
}

TEST_CASE("configuration errors are rejected up front") {
  SynthConfig config;
  config.n_images = 0;
  CHECK_THROWS_AS(synth_generate(config), DataError);

  config.n_images = 10;
  config.captions_per_image = 0;
  CHECK_THROWS_AS(synth_generate(config), DataError);

  config.captions_per_image = 1;
  config.bias_strength = 1.5;
  CHECK_THROWS_AS(synth_generate(config), DataError);

  config.bias_strength = 0.0;
  config.template_set = {"no slot at all"};
  CHECK_THROWS_WITH_AS(synth_generate(config), doctest::Contains("{}"),
                       DataError);

  config.template_set = {"a {} here"};
  config.leaky_words = {"unicorn"};
  CHECK_THROWS_WITH_AS(synth_generate(config),
                       doctest::Contains("not a category"), DataError);
}

TEST_CASE("an inventory without sibling pairs cannot be foiled") {
  CategoryInventory lonely(std::vector<ObjectCategory>{
      {0, "dog", "animal", 1},
      {1, "bottle", "kitchen", 2},
  });
  SynthConfig config;
  config.n_images = 4;
  CHECK_THROWS_WITH_AS(synth_generate(config, lonely),
                       doctest::Contains("two or more"), DataError);
}
