#ifndef FOIL_SYNTH_HPP
#define FOIL_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "foil/corpus.hpp"
#include "foil/rng.hpp"

namespace foil {

struct SynthConfig {
  std::size_t n_images = 1000;
  std::size_t captions_per_image = 1;
  /// 0 = foil words uniform over eligible same-super-category candidates;
  /// 1 = foil-word choice maximally skewed onto the leaky subset.
  double bias_strength = 0.0;
  std::uint64_t seed = 0;
  /// Caption templates; "{}" slots are filled with category names. Empty
  /// means the built-in default set.
  std::vector<std::string> template_set;
  /// Words the planted bias concentrates on. Empty means the default:
  /// the 10 lexicographically first category names of the inventory.
  std::vector<std::string> leaky_words;
};

const std::vector<std::string>& default_templates();

std::vector<std::string> default_leaky_words(const CategoryInventory& inventory,
                                             std::size_t count = 10);

/// Replaces exactly one category mention of a REAL caption with a
/// same-super-category sibling that is absent from the image, flipping the
/// label to FOIL. Returns nullopt when the caption has no replaceable word.
std::optional<Example> foil_caption(const Example& example,
                                    const ImageRecord& image,
                                    const CategoryInventory& inventory,
                                    Rng& rng);

/// Generates a desk-scale foiled-caption corpus. Pure function of the
/// config: identical configs produce byte-identical corpora.
Corpus synth_generate(const SynthConfig& config,
                      const CategoryInventory& inventory =
                          CategoryInventory::mscoco());

}  // namespace foil

#endif
