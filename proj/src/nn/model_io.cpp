#include <fstream>

#include "foil/nn/model.hpp"
#include "json.hpp"

namespace foil::nn {

namespace {

using nlohmann::json;

json tensor_block(const Vector& params, const TensorSpec& spec) {
  json data = json::array();
  for (Eigen::Index i = 0; i < spec.size(); ++i) {
    data.push_back(params[spec.offset + i]);
  }
  return json{{"name", spec.name},
              {"rows", spec.rows},
              {"cols", spec.cols},
              {"data", std::move(data)}};
}

void load_tensors(const json& blocks, const ParamLayout& layout,
                  Vector& params) {
  if (blocks.size() != layout.specs().size()) {
    throw DataError("model file tensor count does not match the architecture");
  }
  for (std::size_t i = 0; i < layout.specs().size(); ++i) {
    const TensorSpec& spec = layout.specs()[i];
    const json& block = blocks.at(i);
    if (block.at("name").get<std::string>() != spec.name ||
        block.at("rows").get<Eigen::Index>() != spec.rows ||
        block.at("cols").get<Eigen::Index>() != spec.cols) {
      throw DataError("model file tensor '" + spec.name +
                      "' does not match the architecture");
    }
    const json& data = block.at("data");
    if (static_cast<Eigen::Index>(data.size()) != spec.size()) {
      throw DataError("model file tensor '" + spec.name + "' has wrong size");
    }
    for (Eigen::Index k = 0; k < spec.size(); ++k) {
      params[spec.offset + k] = data.at(k).get<Scalar>();
    }
  }
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const json& arr) {
  Vector v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr.at(i).get<Scalar>();
  return v;
}

}  // namespace

void save_model(const Model& model, const std::filesystem::path& path) {
  const Featurizer& fz = model.featurizer;
  const FeatureConfig& fc = fz.config();
  const TrainConfig& tc = model.trained_with;

  json doc;
  doc["format"] = "foilkit-model";
  doc["version"] = 1;
  doc["arch"] = to_string(model.arch);
  doc["features"] = {{"image", to_string(fc.image)},
                     {"source", to_string(fc.source)},
                     {"text", to_string(fc.text)},
                     {"min_count", fc.min_count},
                     {"max_len", fc.max_len},
                     {"standardize", fc.standardize}};
  doc["train_config"] = {{"epochs", tc.epochs},
                         {"batch_size", tc.batch_size},
                         {"learning_rate", tc.learning_rate},
                         {"val_fraction", tc.val_fraction},
                         {"patience", tc.patience},
                         {"seed", tc.seed},
                         {"mlp_hidden1", tc.mlp_hidden1},
                         {"mlp_hidden2", tc.mlp_hidden2},
                         {"embed_dim", tc.embed_dim},
                         {"hidden_dim", tc.hidden_dim},
                         {"init_hidden_only", tc.init_hidden_only}};

  json words = json::array();
  for (std::size_t i = 0; i < fz.vocab().size(); ++i) {
    words.push_back(fz.vocab().word_at(static_cast<int>(i)));
  }
  doc["vocab"] = {{"min_count", fz.vocab().min_count()},
                  {"words", std::move(words)},
                  {"hash", model.vocab_hash}};

  json cats = json::array();
  for (const auto& cat : fz.inventory().categories()) {
    cats.push_back({{"id", cat.id},
                    {"name", cat.name},
                    {"super_category", cat.super_category},
                    {"source_id", cat.source_id}});
  }
  doc["categories"] = std::move(cats);

  if (fz.image_scaler()) {
    doc["scaler"] = {{"mean", vector_to_json(fz.image_scaler()->mean)},
                     {"std", vector_to_json(fz.image_scaler()->stddev)}};
  } else {
    doc["scaler"] = nullptr;
  }

  json tensors = json::array();
  if (model.arch == Arch::Mlp) {
    doc["mlp"] = {{"input_dim", model.mlp.input_dim},
                  {"hidden1", model.mlp.hidden1},
                  {"hidden2", model.mlp.hidden2}};
    for (const auto& spec : model.mlp.layout.specs()) {
      tensors.push_back(tensor_block(model.mlp.params, spec));
    }
  } else {
    doc["lstm"] = {{"vocab_size", model.lstm.vocab_size},
                   {"embed_dim", model.lstm.embed_dim},
                   {"hidden_dim", model.lstm.hidden_dim},
                   {"image_dim", model.lstm.image_dim},
                   {"mode", to_string(model.lstm.mode)},
                   {"init_hidden_only", model.lstm.init_hidden_only}};
    for (const auto& spec : model.lstm.layout.specs()) {
      tensors.push_back(tensor_block(model.lstm.params, spec));
    }
  }
  doc["tensors"] = std::move(tensors);

  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot write model file: " + path.string());
  }
  out << doc.dump() << "\n";
  if (!out) {
    throw DataError("failed writing model file: " + path.string());
  }
}

Model load_model(const std::filesystem::path& path,
                 const EmbeddingTable* embeddings) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open model file: " + path.string());
  }
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("model file is not valid JSON: " + std::string(e.what()));
  }

  try {
    if (doc.at("format").get<std::string>() != "foilkit-model") {
      throw DataError("not a model file: " + path.string());
    }
    if (doc.at("version").get<int>() != 1) {
      throw DataError("unsupported model file version");
    }

    const Arch arch = arch_from_string(doc.at("arch").get<std::string>());

    const json& jf = doc.at("features");
    FeatureConfig fc;
    fc.image = feature_kind_from_string(jf.at("image").get<std::string>());
    fc.source = source_from_string(jf.at("source").get<std::string>());
    fc.text = text_feature_from_string(jf.at("text").get<std::string>());
    fc.min_count = jf.at("min_count").get<int>();
    fc.max_len = jf.at("max_len").get<std::size_t>();
    fc.standardize = jf.at("standardize").get<bool>();

    const json& jt = doc.at("train_config");
    TrainConfig tc;
    tc.epochs = jt.at("epochs").get<int>();
    tc.batch_size = jt.at("batch_size").get<int>();
    tc.learning_rate = jt.at("learning_rate").get<Scalar>();
    tc.val_fraction = jt.at("val_fraction").get<double>();
    tc.patience = jt.at("patience").get<int>();
    tc.seed = jt.at("seed").get<std::uint64_t>();
    tc.mlp_hidden1 = jt.at("mlp_hidden1").get<Eigen::Index>();
    tc.mlp_hidden2 = jt.at("mlp_hidden2").get<Eigen::Index>();
    tc.embed_dim = jt.at("embed_dim").get<Eigen::Index>();
    tc.hidden_dim = jt.at("hidden_dim").get<Eigen::Index>();
    tc.init_hidden_only = jt.at("init_hidden_only").get<bool>();

    const json& jv = doc.at("vocab");
    std::vector<std::string> words;
    for (const auto& w : jv.at("words")) words.push_back(w.get<std::string>());
    Vocabulary vocab =
        Vocabulary::from_words(std::move(words), jv.at("min_count").get<int>());
    if (vocab.hash() != jv.at("hash").get<std::uint64_t>()) {
      throw DataError("model file vocabulary hash mismatch; file corrupted");
    }

    std::vector<ObjectCategory> cats;
    for (const auto& jc : doc.at("categories")) {
      ObjectCategory cat;
      cat.id = jc.at("id").get<int>();
      cat.name = jc.at("name").get<std::string>();
      cat.super_category = jc.at("super_category").get<std::string>();
      cat.source_id = jc.at("source_id").get<int>();
      cats.push_back(std::move(cat));
    }
    CategoryInventory inventory(std::move(cats));

    std::optional<Standardizer> scaler;
    if (!doc.at("scaler").is_null()) {
      Standardizer s;
      s.mean = vector_from_json(doc.at("scaler").at("mean"));
      s.stddev = vector_from_json(doc.at("scaler").at("std"));
      scaler = std::move(s);
    }

    Featurizer fz(fc, std::move(inventory), std::move(vocab),
                  std::move(scaler), embeddings);
    Model model(arch, std::move(fz));
    model.trained_with = tc;
    model.vocab_hash = jv.at("hash").get<std::uint64_t>();

    if (arch == Arch::Mlp) {
      const json& jm = doc.at("mlp");
      model.mlp = MlpModel::create(jm.at("input_dim").get<Eigen::Index>(),
                                   jm.at("hidden1").get<Eigen::Index>(),
                                   jm.at("hidden2").get<Eigen::Index>());
      load_tensors(doc.at("tensors"), model.mlp.layout, model.mlp.params);
    } else {
      const json& jl = doc.at("lstm");
      model.lstm = LstmModel::create(
          jl.at("vocab_size").get<Eigen::Index>(),
          image_mode_from_string(jl.at("mode").get<std::string>()),
          jl.at("image_dim").get<Eigen::Index>(),
          jl.at("embed_dim").get<Eigen::Index>(),
          jl.at("hidden_dim").get<Eigen::Index>(),
          jl.at("init_hidden_only").get<bool>());
      load_tensors(doc.at("tensors"), model.lstm.layout, model.lstm.params);
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError("model file is missing fields: " + std::string(e.what()));
  }
}

}  // namespace foil::nn
