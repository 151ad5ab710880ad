#include "foil/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "foil/tokenize.hpp"
#include "json.hpp"

namespace foil {

using nlohmann::json;

namespace {

bool contains_span(const std::vector<std::string>& tokens,
                   const std::vector<std::string>& span) {
  if (span.empty() || span.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + span.size() <= tokens.size(); ++i) {
    if (std::equal(span.begin(), span.end(), tokens.begin() + i)) return true;
  }
  return false;
}

std::string id_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw DataError("image id must be a string or integer");
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("failed to parse " + path.string() + ": " + e.what());
  }
  return doc;
}

json multiset_to_json(const ObjectMultiset& ms) {
  json arr = json::array();
  for (const auto& [id, count] : ms) {
    for (int i = 0; i < count; ++i) arr.push_back(id);
  }
  return arr;
}

ObjectMultiset multiset_from_json(const json& arr,
                                  const CategoryInventory& inventory,
                                  const std::string& context) {
  ObjectMultiset ms;
  for (const auto& v : arr) {
    const int id = v.get<int>();
    inventory.at(id);  // range check
    ms[id] += 1;
  }
  (void)context;
  return ms;
}

struct FoilAnnotation {
  std::string image_id;
  std::string caption;
  bool is_foil = false;
  std::optional<std::string> foil_word;
  std::optional<std::string> original_word;
  std::optional<std::string> split;
};

std::optional<std::string> word_field(const json& ann, const char* key) {
  auto it = ann.find(key);
  if (it == ann.end() || it->is_null()) return std::nullopt;
  std::string w = it->get<std::string>();
  auto toks = tokenize(w);
  if (toks.empty()) return std::nullopt;
  std::string normalized = join_tokens(toks);
  // FOIL-style files mark unfoiled words as "ORIG".
  if (normalized == "orig") return std::nullopt;
  return normalized;
}

FoilAnnotation parse_foil_annotation(const json& ann, std::size_t index) {
  const std::string where = "annotation #" + std::to_string(index);
  if (!ann.is_object()) throw DataError(where + ": not an object");
  FoilAnnotation out;
  try {
    if (!ann.contains("image_id")) {
      throw DataError(where + ": missing image_id");
    }
    out.image_id = id_to_string(ann.at("image_id"));
    if (!ann.contains("caption")) {
      throw DataError(where + ": missing caption");
    }
    out.caption = ann.at("caption").get<std::string>();
    if (ann.contains("foil")) {
      out.is_foil = ann.at("foil").get<bool>();
    } else if (ann.contains("label")) {
      out.is_foil =
          label_from_string(ann.at("label").get<std::string>()) == Label::Foil;
    } else {
      throw DataError(where + ": missing foil/label field");
    }
    out.foil_word = word_field(ann, "foil_word");
    out.original_word = word_field(ann, "original_word");
    if (!out.original_word) out.original_word = word_field(ann, "target_word");
    if (ann.contains("split")) {
      out.split = ann.at("split").get<std::string>();
    }
  } catch (const json::exception& e) {
    throw DataError(where + ": " + e.what());
  }
  return out;
}

Example make_example(const FoilAnnotation& ann, PosSubset pos,
                     std::size_t index) {
  const std::string where = "annotation #" + std::to_string(index);
  Example ex;
  ex.image_id = ann.image_id;
  ex.tokens = tokenize(ann.caption);
  ex.pos = pos;
  if (ann.is_foil) {
    ex.label = Label::Foil;
    if (!ann.foil_word || !ann.original_word) {
      throw DataError(where + ": FOIL record missing foil/original word");
    }
    ex.foil_word = ann.foil_word;
    ex.original_word = ann.original_word;
  } else {
    ex.label = Label::Real;
  }
  return ex;
}

}  // namespace

Corpus::Corpus(std::vector<Example> train, std::vector<Example> test,
               std::map<std::string, ImageRecord> images,
               CategoryInventory categories, PosSubset pos)
    : train_(std::move(train)),
      test_(std::move(test)),
      images_(std::move(images)),
      categories_(std::move(categories)),
      pos_(pos) {
  validate();
}

void Corpus::validate() const {
  std::set<std::pair<std::string, std::string>> train_keys;
  for (const auto& ex : train_) {
    train_keys.emplace(ex.image_id, join_tokens(ex.tokens));
  }
  auto check = [&](const std::vector<Example>& exs, const char* split_name) {
    for (std::size_t i = 0; i < exs.size(); ++i) {
      const auto& ex = exs[i];
      const std::string where =
          std::string(split_name) + " example #" + std::to_string(i);
      if (!images_.count(ex.image_id)) {
        throw DataError(where + ": caption references unknown image id '" +
                        ex.image_id + "'");
      }
      if (ex.label == Label::Foil) {
        if (!ex.foil_word || !ex.original_word) {
          throw DataError(where + ": FOIL example missing foil/original word");
        }
        if (*ex.foil_word == *ex.original_word) {
          throw DataError(where + ": foil word equals original word ('" +
                          *ex.foil_word + "')");
        }
        if (!contains_span(ex.tokens, tokenize(*ex.foil_word))) {
          throw DataError(where + ": foil word '" + *ex.foil_word +
                          "' does not appear in the caption");
        }
      } else if (ex.foil_word || ex.original_word) {
        throw DataError(where + ": REAL example carries foil metadata");
      }
    }
  };
  check(train_, "train");
  check(test_, "test");
  for (const auto& ex : test_) {
    if (train_keys.count({ex.image_id, join_tokens(ex.tokens)})) {
      throw DataError("train and test overlap on (image " + ex.image_id +
                      ", caption '" + join_tokens(ex.tokens) + "')");
    }
  }
}

const ImageRecord& Corpus::image(const std::string& image_id) const {
  auto it = images_.find(image_id);
  if (it == images_.end()) {
    throw DataError("unknown image id '" + image_id + "'");
  }
  return it->second;
}

SplitStats Corpus::stats(Split s) const {
  SplitStats out;
  for (const auto& ex : split(s)) {
    (ex.label == Label::Foil ? out.n_foil : out.n_real) += 1;
  }
  return out;
}

bool Corpus::operator==(const Corpus& other) const {
  return train_ == other.train_ && test_ == other.test_ &&
         images_ == other.images_ && categories_ == other.categories_ &&
         pos_ == other.pos_;
}

Corpus load_foil_json(const std::filesystem::path& foil_path,
                      const std::filesystem::path& coco_instances_path) {
  const json instances = load_json_file(coco_instances_path);

  if (!instances.contains("categories") ||
      !instances.at("categories").is_array() ||
      instances.at("categories").empty()) {
    throw DataError(coco_instances_path.string() +
                    ": instances file has no categories");
  }
  std::vector<ObjectCategory> cats;
  for (const auto& c : instances.at("categories")) {
    ObjectCategory cat;
    cat.source_id = c.at("id").get<int>();
    cat.name = join_tokens(tokenize(c.at("name").get<std::string>()));
    cat.super_category =
        c.contains("supercategory")
            ? join_tokens(tokenize(c.at("supercategory").get<std::string>()))
            : std::string("none");
    cats.push_back(std::move(cat));
  }
  std::sort(cats.begin(), cats.end(),
            [](const auto& a, const auto& b) { return a.source_id < b.source_id; });
  for (std::size_t i = 0; i < cats.size(); ++i) {
    cats[i].id = static_cast<int>(i);
  }
  CategoryInventory inventory(std::move(cats));

  std::map<std::string, ImageRecord> images;
  if (instances.contains("images")) {
    for (const auto& im : instances.at("images")) {
      ImageRecord rec;
      rec.image_id = id_to_string(im.at("id"));
      images.emplace(rec.image_id, std::move(rec));
    }
  }
  if (instances.contains("annotations")) {
    std::size_t idx = 0;
    for (const auto& ann : instances.at("annotations")) {
      const std::string where =
          "instances annotation #" + std::to_string(idx++);
      const std::string image_id = id_to_string(ann.at("image_id"));
      const int source_cat = ann.at("category_id").get<int>();
      auto dense = inventory.id_by_source_id(source_cat);
      if (!dense) {
        throw DataError(where + ": category id " + std::to_string(source_cat) +
                        " is not in the inventory");
      }
      auto it = images.find(image_id);
      if (it == images.end()) {
        throw DataError(where + ": annotation references unknown image id '" +
                        image_id + "'");
      }
      it->second.gold_objects[*dense] += 1;
    }
  }

  const json foil_doc = load_json_file(foil_path);
  PosSubset pos = PosSubset::Noun;
  if (foil_doc.is_object() && foil_doc.contains("pos_subset")) {
    pos = pos_from_string(foil_doc.at("pos_subset").get<std::string>());
  }

  auto split_doc = [&](const char* key) -> std::optional<json> {
    if (!foil_doc.is_object() || !foil_doc.contains(key)) return std::nullopt;
    const json& v = foil_doc.at(key);
    if (v.is_string()) {
      return load_json_file(foil_path.parent_path() / v.get<std::string>());
    }
    return v;
  };

  std::vector<Example> train, test;
  auto append_split = [&](const json& doc, std::vector<Example>* fixed_split) {
    if (!doc.is_object() || !doc.contains("annotations")) {
      throw DataError(foil_path.string() +
                      ": expected an object with an 'annotations' array");
    }
    std::size_t idx = 0;
    for (const auto& raw : doc.at("annotations")) {
      const FoilAnnotation ann = parse_foil_annotation(raw, idx);
      Example ex = make_example(ann, pos, idx);
      ++idx;
      if (fixed_split) {
        fixed_split->push_back(std::move(ex));
      } else {
        if (!ann.split) {
          throw DataError("annotation #" + std::to_string(idx - 1) +
                          ": missing split field (and the file has no "
                          "train/test sections)");
        }
        if (*ann.split == "train") {
          train.push_back(std::move(ex));
        } else if (*ann.split == "test") {
          test.push_back(std::move(ex));
        } else {
          throw DataError("annotation #" + std::to_string(idx - 1) +
                          ": unknown split '" + *ann.split + "'");
        }
      }
    }
  };

  auto train_doc = split_doc("train");
  auto test_doc = split_doc("test");
  if (train_doc || test_doc) {
    if (train_doc) append_split(*train_doc, &train);
    if (test_doc) append_split(*test_doc, &test);
  } else {
    append_split(foil_doc, nullptr);
  }

  if (train.empty() && test.empty()) {
    throw DataError("empty corpus: " + foil_path.string() +
                    " contains no records");
  }

  return Corpus(std::move(train), std::move(test), std::move(images),
                std::move(inventory), pos);
}

DetectionLoadResult load_detections(const std::filesystem::path& path,
                                    const Corpus& corpus,
                                    double confidence_threshold) {
  const json doc = load_json_file(path);
  const json* dets = &doc;
  if (doc.is_object() && doc.contains("detections")) {
    dets = &doc.at("detections");
  }
  if (!dets->is_array()) {
    throw DataError(path.string() +
                    ": expected an array of {image_id, category_id, score}");
  }

  std::map<std::string, ObjectMultiset> predicted;
  DetectionLoadResult result{corpus, 0, 0, 0};
  std::size_t idx = 0;
  for (const auto& d : *dets) {
    const std::string where = "detection #" + std::to_string(idx++);
    const std::string image_id = id_to_string(d.at("image_id"));
    const int source_cat = d.at("category_id").get<int>();
    auto dense = corpus.categories().id_by_source_id(source_cat);
    if (!dense) {
      throw DataError(where + ": unknown category id " +
                      std::to_string(source_cat));
    }
    if (!d.contains("score") || !d.at("score").is_number()) {
      throw DataError(where + ": missing or unparseable confidence score");
    }
    const double score = d.at("score").get<double>();
    if (score >= confidence_threshold) {
      predicted[image_id][*dense] += 1;
      result.detections_kept += 1;
    } else {
      result.detections_dropped += 1;
    }
  }

  std::map<std::string, ImageRecord> images = corpus.images();
  for (auto& [id, rec] : images) {
    auto it = predicted.find(id);
    if (it != predicted.end()) {
      rec.predicted_objects = it->second;
    } else {
      rec.predicted_objects = ObjectMultiset{};
      result.images_without_detections += 1;
    }
  }

  result.corpus = Corpus(corpus.train(), corpus.test(), std::move(images),
                         corpus.categories(), corpus.pos_subset());
  return result;
}

namespace {

json example_to_json(const Example& ex, const ImageRecord& image) {
  json rec;
  rec["image_id"] = ex.image_id;
  rec["tokens"] = ex.tokens;
  rec["label"] = to_string(ex.label);
  rec["pos_subset"] = to_string(ex.pos);
  if (ex.foil_word) rec["foil_word"] = *ex.foil_word;
  if (ex.original_word) rec["original_word"] = *ex.original_word;
  rec["gold_objects"] = multiset_to_json(image.gold_objects);
  if (image.predicted_objects) {
    rec["predicted_objects"] = multiset_to_json(*image.predicted_objects);
  }
  return rec;
}

void write_split(const std::vector<Example>& examples, const Corpus& corpus,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& ex : examples) {
    out << example_to_json(ex, corpus.image(ex.image_id)).dump() << "\n";
  }
}

void read_split(const std::filesystem::path& path,
                const CategoryInventory& inventory, PosSubset expected_pos,
                std::vector<Example>* out,
                std::map<std::string, ImageRecord>* images) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    try {
      Example ex;
      ex.image_id = rec.at("image_id").get<std::string>();
      ex.tokens = rec.at("tokens").get<std::vector<std::string>>();
      ex.label = label_from_string(rec.at("label").get<std::string>());
      ex.pos = pos_from_string(rec.at("pos_subset").get<std::string>());
      if (ex.pos != expected_pos) {
        throw DataError(where + ": pos_subset mismatch");
      }
      if (rec.contains("foil_word")) {
        ex.foil_word = rec.at("foil_word").get<std::string>();
      }
      if (rec.contains("original_word")) {
        ex.original_word = rec.at("original_word").get<std::string>();
      }
      ImageRecord img;
      img.image_id = ex.image_id;
      img.gold_objects =
          multiset_from_json(rec.at("gold_objects"), inventory, where);
      if (rec.contains("predicted_objects")) {
        img.predicted_objects =
            multiset_from_json(rec.at("predicted_objects"), inventory, where);
      }
      auto [it, inserted] = images->emplace(ex.image_id, img);
      if (!inserted && !(it->second == img)) {
        throw DataError(where + ": inconsistent image record for id '" +
                        ex.image_id + "'");
      }
      out->push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
}

}  // namespace

void save_canonical(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json header;
  header["pos_subset"] = to_string(corpus.pos_subset());
  json cats = json::array();
  for (const auto& c : corpus.categories().categories()) {
    cats.push_back({{"id", c.id},
                    {"name", c.name},
                    {"source_id", c.source_id},
                    {"supercategory", c.super_category}});
  }
  header["categories"] = cats;
  {
    std::ofstream out(dir / "corpus.json", std::ios::binary);
    if (!out) throw DataError("cannot write " + (dir / "corpus.json").string());
    out << header.dump(2) << "\n";
  }
  write_split(corpus.train(), corpus, dir / "train.jsonl");
  write_split(corpus.test(), corpus, dir / "test.jsonl");
}

Corpus load_canonical(const std::filesystem::path& dir) {
  const json header = load_json_file(dir / "corpus.json");
  PosSubset pos = pos_from_string(header.at("pos_subset").get<std::string>());
  std::vector<ObjectCategory> cats;
  for (const auto& c : header.at("categories")) {
    ObjectCategory cat;
    cat.id = c.at("id").get<int>();
    cat.name = c.at("name").get<std::string>();
    cat.source_id = c.at("source_id").get<int>();
    cat.super_category = c.at("supercategory").get<std::string>();
    cats.push_back(std::move(cat));
  }
  CategoryInventory inventory(std::move(cats));

  std::vector<Example> train, test;
  std::map<std::string, ImageRecord> images;
  read_split(dir / "train.jsonl", inventory, pos, &train, &images);
  read_split(dir / "test.jsonl", inventory, pos, &test, &images);
  if (train.empty() && test.empty()) {
    throw DataError("empty corpus: " + dir.string());
  }
  return Corpus(std::move(train), std::move(test), std::move(images),
                std::move(inventory), pos);
}

}  // namespace foil
