#include "foil/synth.hpp"

#include <algorithm>
#include <set>

#include "foil/tokenize.hpp"

namespace foil {
namespace {

// Arity mix leans toward short captions; slots are filled with distinct
// mentioned categories.
const std::vector<std::string> kDefaultTemplates = {
    "a {} in the picture",
    "a photo of a {}",
    "there is a {} here",
    "a close up of a {}",
    "the {} in this scene",
    "a {} on its own",
    "a picture showing a {}",
    "someone looking at a {}",
    "a {} next to a {}",
    "a {} and a {} together",
    "a {} sitting near a {}",
    "a photo of a {} beside a {}",
    "a {} with a {} and a {}",
    "a scene with a {} a {} and a {}",
};

struct Template {
  // Literal token runs between slots; size() == arity + 1.
  std::vector<std::vector<std::string>> chunks;
  std::size_t arity() const { return chunks.size() - 1; }
};

Template parse_template(const std::string& text) {
  Template tpl;
  std::size_t pos = 0;
  while (true) {
    const std::size_t slot = text.find("{}", pos);
    if (slot == std::string::npos) {
      tpl.chunks.push_back(tokenize(text.substr(pos)));
      break;
    }
    tpl.chunks.push_back(tokenize(text.substr(pos, slot - pos)));
    pos = slot + 2;
  }
  return tpl;
}

std::vector<std::string> render_template(const Template& tpl,
                                         const std::vector<int>& mention_ids,
                                         const CategoryInventory& inventory) {
  std::vector<std::string> tokens;
  for (std::size_t i = 0; i < tpl.chunks.size(); ++i) {
    tokens.insert(tokens.end(), tpl.chunks[i].begin(), tpl.chunks[i].end());
    if (i < mention_ids.size()) {
      const auto& name = inventory.name_tokens(mention_ids[i]);
      tokens.insert(tokens.end(), name.begin(), name.end());
    }
  }
  return tokens;
}

struct Mention {
  std::size_t token_pos;
  std::size_t token_len;
  int category_id;
};

// Non-overlapping category mentions, longest span first at each position.
std::vector<Mention> find_mentions(const std::vector<std::string>& tokens,
                                   const CategoryInventory& inventory) {
  std::vector<Mention> mentions;
  const std::size_t max_len = inventory.max_name_tokens();
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    for (std::size_t len = std::min(max_len, tokens.size() - i); len >= 1;
         --len) {
      std::string candidate = tokens[i];
      for (std::size_t k = 1; k < len; ++k) candidate += " " + tokens[i + k];
      if (auto id = inventory.id_by_name(candidate)) {
        mentions.push_back({i, len, *id});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return mentions;
}

bool span_in_tokens(const std::vector<std::string>& tokens,
                    const std::vector<std::string>& span) {
  if (span.empty() || span.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + span.size() <= tokens.size(); ++i) {
    if (std::equal(span.begin(), span.end(), tokens.begin() + i)) return true;
  }
  return false;
}

struct FoilSite {
  Mention mention;
  std::vector<int> candidates;
  std::vector<int> leaky_candidates;
};

// Candidates: same super-category, not this category, absent from the
// image's gold objects, and not mentioned anywhere else in the caption.
std::vector<FoilSite> foil_sites(const std::vector<std::string>& tokens,
                                 const ImageRecord& image,
                                 const CategoryInventory& inventory,
                                 const std::set<int>& leaky_ids) {
  std::vector<FoilSite> sites;
  for (const Mention& m : find_mentions(tokens, inventory)) {
    FoilSite site{m, {}, {}};
    for (int sib : inventory.siblings(m.category_id)) {
      if (image.gold_objects.count(sib)) continue;
      if (span_in_tokens(tokens, inventory.name_tokens(sib))) continue;
      site.candidates.push_back(sib);
      if (leaky_ids.count(sib)) site.leaky_candidates.push_back(sib);
    }
    if (!site.candidates.empty()) sites.push_back(std::move(site));
  }
  return sites;
}

Example apply_foil(const Example& example, const Mention& mention,
                   int foil_id, const CategoryInventory& inventory) {
  Example out = example;
  const auto& foil_name = inventory.name_tokens(foil_id);
  out.tokens.erase(out.tokens.begin() + mention.token_pos,
                   out.tokens.begin() + mention.token_pos + mention.token_len);
  out.tokens.insert(out.tokens.begin() + mention.token_pos, foil_name.begin(),
                    foil_name.end());
  out.label = Label::Foil;
  out.original_word = inventory.at(mention.category_id).name;
  out.foil_word = inventory.at(foil_id).name;
  return out;
}

// prefer_leaky restricts the draw to sites with a leaky candidate; returns
// nullopt if the caption has none (the generator then resamples).
std::optional<Example> foil_caption_impl(const Example& example,
                                         const ImageRecord& image,
                                         const CategoryInventory& inventory,
                                         Rng& rng,
                                         const std::set<int>& leaky_ids,
                                         bool prefer_leaky) {
  auto sites = foil_sites(example.tokens, image, inventory, leaky_ids);
  if (sites.empty()) return std::nullopt;
  if (prefer_leaky) {
    std::vector<FoilSite> leaky_sites;
    for (auto& s : sites) {
      if (!s.leaky_candidates.empty()) leaky_sites.push_back(s);
    }
    if (leaky_sites.empty()) return std::nullopt;
    const FoilSite& site = leaky_sites[rng.below(leaky_sites.size())];
    const int foil_id =
        site.leaky_candidates[rng.below(site.leaky_candidates.size())];
    return apply_foil(example, site.mention, foil_id, inventory);
  }
  const FoilSite& site = sites[rng.below(sites.size())];
  const int foil_id = site.candidates[rng.below(site.candidates.size())];
  return apply_foil(example, site.mention, foil_id, inventory);
}

std::string synth_image_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "synth-%06zu", index);
  return buf;
}

}  // namespace

const std::vector<std::string>& default_templates() {
  return kDefaultTemplates;
}

std::vector<std::string> default_leaky_words(const CategoryInventory& inventory,
                                             std::size_t count) {
  std::vector<std::string> names;
  for (const auto& c : inventory.categories()) names.push_back(c.name);
  std::sort(names.begin(), names.end());
  if (names.size() > count) names.resize(count);
  return names;
}

std::optional<Example> foil_caption(const Example& example,
                                    const ImageRecord& image,
                                    const CategoryInventory& inventory,
                                    Rng& rng) {
  return foil_caption_impl(example, image, inventory, rng, {}, false);
}

Corpus synth_generate(const SynthConfig& config,
                      const CategoryInventory& inventory) {
  if (config.n_images == 0) {
    throw DataError("synth: n_images must be positive");
  }
  if (config.captions_per_image == 0) {
    throw DataError("synth: captions_per_image must be positive");
  }
  if (config.bias_strength < 0.0 || config.bias_strength > 1.0) {
    throw DataError("synth: bias_strength must be in [0,1]");
  }

  const auto& template_texts =
      config.template_set.empty() ? default_templates() : config.template_set;
  std::vector<Template> templates;
  for (const auto& t : template_texts) {
    Template tpl = parse_template(t);
    if (tpl.arity() == 0) {
      throw DataError("synth: template '" + t + "' has no {} slot");
    }
    templates.push_back(std::move(tpl));
  }
  if (templates.empty()) throw DataError("synth: template set is empty");

  bool any_siblings = false;
  for (const auto& c : inventory.categories()) {
    if (!inventory.siblings(c.id).empty()) any_siblings = true;
  }
  if (!any_siblings) {
    throw DataError("synth: no super-category has two or more categories");
  }

  const std::vector<std::string> leaky_names =
      config.leaky_words.empty() ? default_leaky_words(inventory)
                                 : config.leaky_words;
  std::set<int> leaky_ids;
  for (const auto& name : leaky_names) {
    auto id = inventory.id_by_name(name);
    if (!id) throw DataError("synth: leaky word '" + name + "' is not a category");
    leaky_ids.insert(*id);
  }

  Rng rng(config.seed);
  std::vector<Example> train, test;
  std::map<std::string, ImageRecord> images;
  const std::size_t n_train_images = config.n_images - config.n_images / 3;

  constexpr int kMaxImageAttempts = 200;
  for (std::size_t i = 0; i < config.n_images; ++i) {
    const std::string image_id = synth_image_id(i);
    ImageRecord image;
    std::vector<Example> captions;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxImageAttempts && !accepted; ++attempt) {
      image = ImageRecord{image_id, {}, std::nullopt};
      const std::size_t n_instances = 1 + rng.below(4);
      for (std::size_t k = 0; k < n_instances; ++k) {
        image.gold_objects[static_cast<int>(rng.below(inventory.size()))] += 1;
      }
      std::vector<int> distinct;
      for (const auto& [id, count] : image.gold_objects) distinct.push_back(id);

      std::vector<std::size_t> usable_templates;
      for (std::size_t t = 0; t < templates.size(); ++t) {
        if (templates[t].arity() <= distinct.size()) usable_templates.push_back(t);
      }
      if (usable_templates.empty()) continue;

      captions.clear();
      bool ok = true;
      for (std::size_t c = 0; c < config.captions_per_image && ok; ++c) {
        const Template& tpl =
            templates[usable_templates[rng.below(usable_templates.size())]];
        std::vector<int> order = distinct;
        rng.shuffle(order);
        order.resize(tpl.arity());
        Example ex;
        ex.image_id = image_id;
        ex.tokens = render_template(tpl, order, inventory);
        ex.label = Label::Real;
        ex.pos = PosSubset::Noun;
        if (rng.coin(0.5)) {
          const bool prefer_leaky = rng.coin(config.bias_strength);
          auto foiled =
              foil_caption_impl(ex, image, inventory, rng, leaky_ids,
                                prefer_leaky);
          if (!foiled) {
            ok = false;  // resample this image
            break;
          }
          ex = *foiled;
        }
        captions.push_back(std::move(ex));
      }
      accepted = ok;
    }
    if (!accepted) {
      throw DataError(
          "synth: no eligible foil candidate after repeated attempts; "
          "template set or category inventory too small");
    }
    images.emplace(image_id, std::move(image));
    auto& dest = i < n_train_images ? train : test;
    for (auto& ex : captions) dest.push_back(std::move(ex));
  }

  return Corpus(std::move(train), std::move(test), std::move(images),
                inventory, PosSubset::Noun);
}

}  // namespace foil
