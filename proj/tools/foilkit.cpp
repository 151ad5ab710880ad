#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "foil/eval.hpp"
#include "foil/explain.hpp"
#include "foil/featurize.hpp"
#include "foil/nn/model.hpp"
#include "foil/synth.hpp"
#include "foil/tokenize.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

void write_resolved_config(CLI::App* sub, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw foil::DataError("cannot write " + path.string());
  out << sub->config_to_str(true, false);
  if (!out) throw foil::DataError("failed writing " + path.string());
}

// CLI11 honors a config file only on the app that owns the whole parse, so
// a subcommand's --config is expanded by hand: every file entry becomes an
// ordinary flag unless the command line already set that option. Entries
// holding a single empty string mirror options that were never given and
// are skipped rather than fed through validators.
std::vector<std::string> expand_config_args(const CLI::App& app,
                                            std::vector<std::string> args) {
  const CLI::App* sub = nullptr;
  std::size_t sub_pos = 0;
  for (std::size_t i = 0; i < args.size(); ++i) {
    sub = app.get_subcommand_no_throw(args[i]);
    if (sub != nullptr) {
      sub_pos = i;
      break;
    }
  }
  if (sub == nullptr) return args;

  std::string config_path;
  for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  const auto given = [&](const std::string& flag) {
    for (std::size_t i = sub_pos + 1; i < args.size(); ++i) {
      if (args[i] == flag || args[i].rfind(flag + "=", 0) == 0) return true;
    }
    return false;
  };

  for (const CLI::ConfigItem& item :
       sub->get_config_formatter()->from_file(config_path)) {
    if (!item.parents.empty() || item.name == "config") continue;
    if (item.inputs.size() == 1 && item.inputs.front().empty()) continue;
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    if (item.inputs.empty()) {
      args.push_back(flag);
    } else {
      for (const std::string& value : item.inputs) {
        args.push_back(flag + "=" + value);
      }
    }
  }
  return args;
}

std::optional<foil::EmbeddingTable> load_embeddings_if(
    const std::string& path) {
  if (path.empty()) return std::nullopt;
  return foil::EmbeddingTable::load(path);
}

void print_split_line(const char* name, const foil::SplitStats& stats) {
  std::cout << name << ": " << stats.total() << " examples (" << stats.n_real
            << " real, " << stats.n_foil << " foil)\n";
}

std::vector<std::string> read_template_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw foil::DataError("cannot open template file: " + path.string());
  std::vector<std::string> templates;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) templates.push_back(line);
  }
  if (templates.empty()) {
    throw foil::DataError("template file is empty: " + path.string());
  }
  return templates;
}

struct SynthOpts {
  std::string out;
  std::size_t n_images = 1000;
  std::size_t captions_per_image = 1;
  double bias = 0.0;
  std::uint64_t seed = 0;
  std::string template_file;
};

void run_synth(const SynthOpts& o, CLI::App* sub) {
  foil::SynthConfig cfg;
  cfg.n_images = o.n_images;
  cfg.captions_per_image = o.captions_per_image;
  cfg.bias_strength = o.bias;
  cfg.seed = o.seed;
  if (!o.template_file.empty()) {
    cfg.template_set = read_template_file(o.template_file);
  }
  foil::Corpus corpus = foil::synth_generate(cfg);

  fs::create_directories(o.out);
  foil::save_canonical(corpus, o.out);
  write_resolved_config(sub, fs::path(o.out) / "resolved.cfg");

  std::cout << "wrote corpus to " << o.out << "\n";
  print_split_line("train", corpus.stats(foil::Split::Train));
  print_split_line("test", corpus.stats(foil::Split::Test));

  if (o.bias > 0.0) {
    const auto leaky = foil::default_leaky_words(corpus.categories());
    std::size_t foils = 0, leaky_foils = 0;
    for (const auto* split : {&corpus.train(), &corpus.test()}) {
      for (const auto& ex : *split) {
        if (ex.label != foil::Label::Foil) continue;
        foils += 1;
        if (std::find(leaky.begin(), leaky.end(), *ex.foil_word) !=
            leaky.end()) {
          leaky_foils += 1;
        }
      }
    }
    std::cout << "leaky-word concentration among foils: "
              << foil::format_ratio_percent(
                     static_cast<long long>(leaky_foils),
                     static_cast<long long>(foils))
              << "%\n";
  }
}

struct IngestOpts {
  std::string foil_json;
  std::string coco_instances;
  std::string detections;
  double det_threshold = 0.5;
  std::string out;
};

void run_ingest(const IngestOpts& o, CLI::App* sub) {
  foil::Corpus corpus = foil::load_foil_json(o.foil_json, o.coco_instances);
  if (!o.detections.empty()) {
    foil::DetectionLoadResult res =
        foil::load_detections(o.detections, corpus, o.det_threshold);
    std::cout << "detections: kept " << res.detections_kept << ", dropped "
              << res.detections_dropped << " below threshold\n";
    if (res.images_without_detections > 0) {
      std::cout << "warning: " << res.images_without_detections
                << " images had no detections (empty predicted sets)\n";
    }
    corpus = std::move(res.corpus);
  }
  fs::create_directories(o.out);
  foil::save_canonical(corpus, o.out);
  write_resolved_config(sub, fs::path(o.out) / "resolved.cfg");

  std::cout << "wrote corpus to " << o.out << "\n";
  print_split_line("train", corpus.stats(foil::Split::Train));
  print_split_line("test", corpus.stats(foil::Split::Test));
}

struct TrainOpts {
  std::string corpus;
  std::string out;
  std::string model = "mlp";
  std::string image_feats = "none";
  std::string source = "gold";
  std::string text_feats = "bow";
  std::string embeddings;
  bool standardize = false;
  int min_count = 1;
  std::size_t max_len = 20;
  foil::nn::TrainConfig tc;
  bool init_hidden_only = false;
};

foil::FeatureConfig feature_config_from(const TrainOpts& o) {
  foil::FeatureConfig fc;
  fc.image = foil::feature_kind_from_string(o.image_feats);
  fc.source = foil::source_from_string(o.source);
  fc.text = foil::text_feature_from_string(o.text_feats);
  fc.min_count = o.min_count;
  fc.max_len = o.max_len;
  fc.standardize = o.standardize;
  return fc;
}

void run_train(const TrainOpts& o, CLI::App* sub) {
  foil::Corpus corpus = foil::load_canonical(o.corpus);
  auto embeddings = load_embeddings_if(o.embeddings);
  const foil::EmbeddingTable* emb = embeddings ? &*embeddings : nullptr;

  foil::FeatureConfig fc = feature_config_from(o);
  foil::nn::TrainConfig tc = o.tc;
  tc.init_hidden_only = o.init_hidden_only;

  foil::nn::TrainLog log;
  foil::nn::Model model = foil::nn::train_model(
      corpus, foil::nn::arch_from_string(o.model), fc, tc, emb, &log);

  for (const auto& e : log.epochs) {
    std::cout << "epoch " << e.epoch << "  train_loss " << e.train_loss
              << "  val_acc " << e.val_accuracy << "\n";
  }
  std::cout << "best epoch " << log.best_epoch << " (val_acc "
            << log.best_val_accuracy << ")\n";

  const fs::path out(o.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  foil::nn::save_model(model, out);
  std::cout << "wrote model to " << o.out << "\n";

  nlohmann::json jlog;
  jlog["best_epoch"] = log.best_epoch;
  jlog["best_val_accuracy"] = log.best_val_accuracy;
  jlog["epochs"] = nlohmann::json::array();
  for (const auto& e : log.epochs) {
    jlog["epochs"].push_back({{"epoch", e.epoch},
                              {"train_loss", e.train_loss},
                              {"val_accuracy", e.val_accuracy}});
  }
  std::ofstream lout(o.out + ".trainlog.json");
  lout << jlog.dump(2) << "\n";
  write_resolved_config(sub, o.out + ".resolved.cfg");
}

struct EvalOpts {
  std::string corpus;
  std::string model;
  std::string split = "test";
  std::string embeddings;
  std::string out;
};

void run_eval(const EvalOpts& o, CLI::App* sub) {
  foil::Corpus corpus = foil::load_canonical(o.corpus);
  auto embeddings = load_embeddings_if(o.embeddings);
  const foil::EmbeddingTable* emb = embeddings ? &*embeddings : nullptr;
  foil::nn::Model model = foil::nn::load_model(o.model, emb);

  const foil::Split split =
      o.split == "train" ? foil::Split::Train : foil::Split::Test;
  foil::EvalReport report = foil::evaluate(model, corpus, split);

  std::cout << "n " << report.n() << " (" << report.n_real() << " real, "
            << report.n_foil() << " foil)\n";
  std::cout << "accuracy overall " << foil::percent_overall(report) << "  real "
            << foil::percent_real(report) << "  foil "
            << foil::percent_foil(report) << "\n";

  if (!o.out.empty()) {
    const fs::path prefix(o.out);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    foil::AblationRow row;
    row.cell = {model.featurizer.config().image,
                model.featurizer.config().source,
                model.featurizer.config().text, model.arch};
    row.seed = model.trained_with.seed;
    row.ok = true;
    row.report = report;
    foil::write_ablation_csv({row}, o.out + ".csv");
    foil::write_ablation_jsonl({row}, o.out + ".confusion.jsonl");
    write_resolved_config(sub, o.out + ".resolved.cfg");
  }
}

struct AblateOpts {
  std::string corpus;
  std::string out;
  std::string embeddings;
  int jobs = 1;
  bool standardize = false;
  int min_count = 1;
  std::size_t max_len = 20;
  foil::nn::TrainConfig tc;
};

void run_ablate(const AblateOpts& o, CLI::App* sub) {
  foil::Corpus corpus = foil::load_canonical(o.corpus);
  auto embeddings = load_embeddings_if(o.embeddings);
  const foil::EmbeddingTable* emb = embeddings ? &*embeddings : nullptr;

  foil::FeatureConfig base;
  base.min_count = o.min_count;
  base.max_len = o.max_len;
  base.standardize = o.standardize;

  const auto rows = foil::run_ablation(corpus, foil::default_ablation_grid(),
                                       base, o.tc, emb, o.jobs);

  fs::create_directories(o.out);
  foil::write_ablation_csv(rows, fs::path(o.out) / "ablation.csv");
  foil::write_ablation_jsonl(rows, fs::path(o.out) / "ablation.jsonl");
  write_resolved_config(sub, fs::path(o.out) / "resolved.cfg");

  for (const auto& row : rows) {
    std::cout << foil::image_feat_label(row.cell) << " + "
              << foil::to_string(row.cell.text) << "  "
              << foil::nn::to_string(row.cell.arch) << "  ";
    if (row.ok) {
      std::cout << "overall " << foil::percent_overall(row.report) << " (real "
                << foil::percent_real(row.report) << ", foil "
                << foil::percent_foil(row.report) << ")\n";
    } else {
      std::cout << "FAILED: " << row.error << "\n";
    }
  }
  std::cout << "wrote ablation to " << o.out << "\n";
}

struct ExplainOpts {
  std::string corpus;
  std::string model;
  std::string embeddings;
  std::string out;
  std::size_t n_samples = 1000;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::size_t limit = 0;
};

void run_explain(const ExplainOpts& o, CLI::App* sub) {
  foil::Corpus corpus = foil::load_canonical(o.corpus);
  auto embeddings = load_embeddings_if(o.embeddings);
  const foil::EmbeddingTable* emb = embeddings ? &*embeddings : nullptr;
  foil::nn::Model model = foil::nn::load_model(o.model, emb);

  foil::KernelConfig kc;
  kc.n_samples = o.n_samples;
  kc.sigma = o.sigma;
  kc.seed = o.seed;

  foil::AuditResult audit =
      foil::foil_word_hit_rate(model, corpus, kc, o.limit);

  std::cout << "explained " << audit.n_explained
            << " correctly classified foils\n";
  std::cout << "top-feature hit rate "
            << foil::format_ratio_percent(
                   static_cast<long long>(audit.n_hits),
                   static_cast<long long>(audit.n_explained))
            << "% (" << audit.n_hits << " hits)\n";

  if (!o.out.empty()) {
    const fs::path prefix(o.out);
    if (prefix.has_parent_path()) fs::create_directories(prefix.parent_path());
    foil::write_audit_jsonl(audit, o.out + ".audit.jsonl");
    foil::write_audit_summary(audit, o.out + ".summary.json");
    write_resolved_config(sub, o.out + ".resolved.cfg");
  }
}

void add_train_hyper_flags(CLI::App* sub, foil::nn::TrainConfig& tc) {
  sub->add_option("--seed", tc.seed, "training seed (init, splits, shuffles)")
      ->capture_default_str();
  sub->add_option("--epochs", tc.epochs, "maximum training epochs")
      ->capture_default_str();
  sub->add_option("--batch-size", tc.batch_size, "minibatch size")
      ->capture_default_str();
  sub->add_option("--lr", tc.learning_rate, "Adam learning rate")
      ->capture_default_str();
  sub->add_option("--val-fraction", tc.val_fraction,
                  "fraction of train held out for model selection")
      ->capture_default_str();
  sub->add_option("--patience", tc.patience,
                  "epochs without validation improvement before stopping")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "foilkit: build foiled-caption corpora, train REAL-vs-FOIL "
      "classifiers, and audit what they rely on"};
  app.require_subcommand(1);

  SynthOpts synth;
  CLI::App* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic foiled-caption corpus");
  synth_cmd->set_config("--config", "", "read options from a config file");
  synth_cmd->add_option("--out", synth.out, "output corpus directory")
      ->required();
  synth_cmd->add_option("--n-images", synth.n_images, "number of images")
      ->capture_default_str();
  synth_cmd
      ->add_option("--captions-per-image", synth.captions_per_image,
                   "captions generated per image")
      ->capture_default_str();
  synth_cmd
      ->add_option("--bias", synth.bias,
                   "foil-word bias strength in [0,1]: 0 = uniform foil "
                   "choice, 1 = concentrated on the leaky words")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "corpus seed")
      ->capture_default_str();
  synth_cmd->add_option("--templates", synth.template_file,
                        "caption template file, one template per line");
  synth_cmd->callback([&]() { run_synth(synth, synth_cmd); });

  IngestOpts ingest;
  CLI::App* ingest_cmd = app.add_subcommand(
      "ingest", "convert annotation files into the canonical corpus layout");
  ingest_cmd->set_config("--config", "", "read options from a config file");
  ingest_cmd
      ->add_option("--foil-json", ingest.foil_json,
                   "foiled-caption annotation file")
      ->required();
  ingest_cmd
      ->add_option("--coco-instances", ingest.coco_instances,
                   "instances file providing images, objects, and categories")
      ->required();
  ingest_cmd->add_option("--detections", ingest.detections,
                         "object detections file (enables the pred source)");
  ingest_cmd
      ->add_option("--det-threshold", ingest.det_threshold,
                   "detection confidence threshold")
      ->capture_default_str();
  ingest_cmd->add_option("--out", ingest.out, "output corpus directory")
      ->required();
  ingest_cmd->callback([&]() { run_ingest(ingest, ingest_cmd); });

  TrainOpts train;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a REAL-vs-FOIL classifier");
  train_cmd->set_config("--config", "", "read options from a config file");
  train_cmd->add_option("--corpus", train.corpus, "canonical corpus directory")
      ->required();
  train_cmd->add_option("--out", train.out, "output model file")->required();
  train_cmd
      ->add_option("--model", train.model,
                   "classifier: mlp (feed-forward over image + bag-of-words), "
                   "lstm (recurrent over tokens, image appended to the final "
                   "state), mm-lstm (recurrent, image initializes the state)")
      ->check(CLI::IsMember({"mlp", "lstm", "mm-lstm"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--image-feats", train.image_feats,
                   "image features: none, mention (binary per category), freq "
                   "(object counts per category), cnn (precomputed embedding)")
      ->check(CLI::IsMember({"none", "mention", "freq", "cnn"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--source", train.source,
                   "object source: gold annotations or pred detections")
      ->check(CLI::IsMember({"gold", "pred"}))
      ->capture_default_str();
  train_cmd
      ->add_option("--text-feats", train.text_feats,
                   "text features: none, bow (bag of words), tokens "
                   "(index sequence for recurrent classifiers)")
      ->check(CLI::IsMember({"none", "bow", "tokens"}))
      ->capture_default_str();
  train_cmd->add_option("--embeddings", train.embeddings,
                        "precomputed image embedding file (for cnn features)");
  train_cmd
      ->add_option("--min-count", train.min_count,
                   "vocabulary minimum training frequency")
      ->capture_default_str();
  train_cmd
      ->add_option("--max-len", train.max_len,
                   "token sequence truncation length")
      ->capture_default_str();
  train_cmd->add_flag("--standardize", train.standardize,
                      "standardize freq/cnn image features with train-split "
                      "statistics");
  add_train_hyper_flags(train_cmd, train.tc);
  train_cmd
      ->add_option("--hidden1", train.tc.mlp_hidden1,
                   "first feed-forward hidden width")
      ->capture_default_str();
  train_cmd
      ->add_option("--hidden2", train.tc.mlp_hidden2,
                   "second feed-forward hidden width")
      ->capture_default_str();
  train_cmd
      ->add_option("--embed-dim", train.tc.embed_dim,
                   "word embedding dimension")
      ->capture_default_str();
  train_cmd
      ->add_option("--hidden-dim", train.tc.hidden_dim,
                   "recurrent hidden dimension")
      ->capture_default_str();
  train_cmd->add_flag("--init-hidden-only", train.init_hidden_only,
                      "mm-lstm: project the image into the hidden state only, "
                      "leaving the cell state at zero");
  train_cmd->callback([&]() { run_train(train, train_cmd); });

  EvalOpts eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "evaluate a trained model on a corpus split");
  eval_cmd->set_config("--config", "", "read options from a config file");
  eval_cmd->add_option("--corpus", eval.corpus, "canonical corpus directory")
      ->required();
  eval_cmd->add_option("--model", eval.model, "model file")->required();
  eval_cmd->add_option("--split", eval.split, "split to score")
      ->check(CLI::IsMember({"train", "test"}))
      ->capture_default_str();
  eval_cmd->add_option("--embeddings", eval.embeddings,
                       "precomputed image embedding file");
  eval_cmd->add_option("--out", eval.out,
                       "output prefix for <prefix>.csv and "
                       "<prefix>.confusion.jsonl");
  eval_cmd->callback([&]() { run_eval(eval, eval_cmd); });

  AblateOpts ablate;
  CLI::App* ablate_cmd = app.add_subcommand(
      "ablate",
      "train and score the feature grid: image-only rows (cnn, gold-freq), "
      "text-only rows (bow mlp, tokens lstm), and combined rows");
  ablate_cmd->set_config("--config", "", "read options from a config file");
  ablate_cmd
      ->add_option("--corpus", ablate.corpus, "canonical corpus directory")
      ->required();
  ablate_cmd->add_option("--out", ablate.out, "output directory")->required();
  ablate_cmd->add_option("--embeddings", ablate.embeddings,
                         "precomputed image embedding file (cnn rows fail "
                         "without one)");
  ablate_cmd
      ->add_option("--jobs", ablate.jobs, "concurrent cells to train")
      ->capture_default_str();
  ablate_cmd
      ->add_option("--min-count", ablate.min_count,
                   "vocabulary minimum training frequency")
      ->capture_default_str();
  ablate_cmd
      ->add_option("--max-len", ablate.max_len,
                   "token sequence truncation length")
      ->capture_default_str();
  ablate_cmd->add_flag("--standardize", ablate.standardize,
                       "standardize freq/cnn image features");
  add_train_hyper_flags(ablate_cmd, ablate.tc);
  ablate_cmd->callback([&]() { run_ablate(ablate, ablate_cmd); });

  ExplainOpts explain;
  CLI::App* explain_cmd = app.add_subcommand(
      "explain",
      "explain correctly classified foils and report how often the top "
      "feature is the planted foil word");
  explain_cmd->set_config("--config", "", "read options from a config file");
  explain_cmd
      ->add_option("--corpus", explain.corpus, "canonical corpus directory")
      ->required();
  explain_cmd->add_option("--model", explain.model, "model file")->required();
  explain_cmd->add_option("--embeddings", explain.embeddings,
                          "precomputed image embedding file");
  explain_cmd
      ->add_option("--n-samples", explain.n_samples,
                   "perturbation samples per explanation")
      ->capture_default_str();
  explain_cmd
      ->add_option("--sigma", explain.sigma,
                   "kernel width (0 selects 0.75 * sqrt(distinct words))")
      ->capture_default_str();
  explain_cmd->add_option("--seed", explain.seed, "explanation seed")
      ->capture_default_str();
  explain_cmd
      ->add_option("--limit", explain.limit,
                   "explain at most this many foils (0 = all)")
      ->capture_default_str();
  explain_cmd->add_option("--out", explain.out,
                          "output prefix for <prefix>.audit.jsonl and "
                          "<prefix>.summary.json");
  explain_cmd->callback([&]() { run_explain(explain, explain_cmd); });

  try {
    std::vector<std::string> args =
        expand_config_args(app, {argv + 1, argv + argc});
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const foil::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const foil::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
