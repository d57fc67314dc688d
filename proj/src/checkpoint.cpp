#include "cast/checkpoint.hpp"

#include <fstream>

namespace cast {

using nlohmann::json;

json params_to_json(const nn::ParameterStore& store) {
  json out = json::object();
  for (std::size_t i = 0; i < store.count(); ++i) {
    const nn::Parameter& p = store.at(i);
    json t;
    t["rows"] = p.value.rows();
    t["cols"] = p.value.cols();
    std::vector<double> data(p.value.data(), p.value.data() + p.value.size());
    t["data"] = std::move(data);
    out[p.name] = std::move(t);
  }
  return out;
}

void params_from_json(nn::ParameterStore& store, const json& j) {
  if (j.size() != store.count())
    throw DataError("checkpoint holds " + std::to_string(j.size()) +
                    " tensors, component expects " +
                    std::to_string(store.count()));
  for (std::size_t i = 0; i < store.count(); ++i) {
    nn::Parameter& p = store.at(i);
    auto it = j.find(p.name);
    if (it == j.end())
      throw DataError("checkpoint is missing tensor '" + p.name + "'");
    const json& t = *it;
    const auto rows = t.at("rows").get<std::ptrdiff_t>();
    const auto cols = t.at("cols").get<std::ptrdiff_t>();
    if (rows != p.value.rows() || cols != p.value.cols())
      throw DataError("checkpoint tensor '" + p.name + "' has shape " +
                      std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + std::to_string(p.value.rows()) + "x" +
                      std::to_string(p.value.cols()));
    const auto data = t.at("data").get<std::vector<double>>();
    if (std::ptrdiff_t(data.size()) != rows * cols)
      throw DataError("checkpoint tensor '" + p.name + "' has wrong length");
    std::copy(data.begin(), data.end(), p.value.data());
  }
}

json model_config_to_json(const ModelConfig& cfg) {
  return json{{"num_layers", cfg.num_layers},
              {"num_heads", cfg.num_heads},
              {"head_dim", cfg.head_dim},
              {"ffn_dim", cfg.ffn_dim},
              {"max_context_words", cfg.max_context_words},
              {"max_sentence_len", cfg.max_sentence_len},
              {"vocab_size", cfg.vocab_size},
              {"num_styles", cfg.num_styles}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.num_layers = j.at("num_layers").get<int>();
  cfg.num_heads = j.at("num_heads").get<int>();
  cfg.head_dim = j.at("head_dim").get<int>();
  cfg.ffn_dim = j.at("ffn_dim").get<int>();
  cfg.max_context_words = j.at("max_context_words").get<int>();
  cfg.max_sentence_len = j.at("max_sentence_len").get<int>();
  cfg.vocab_size = j.at("vocab_size").get<int>();
  cfg.num_styles = j.at("num_styles").get<int>();
  return cfg;
}

json classifier_config_to_json(const ClassifierConfig& cfg) {
  return json{{"style_emb_dim", cfg.style_emb_dim},
              {"filter_widths", cfg.filter_widths},
              {"filters_per_width", cfg.filters_per_width},
              {"max_sentence_len", cfg.max_sentence_len},
              {"coh_layers", cfg.coh_layers},
              {"coh_heads", cfg.coh_heads},
              {"coh_head_dim", cfg.coh_head_dim},
              {"coh_ffn_dim", cfg.coh_ffn_dim},
              {"coh_max_context_words", cfg.coh_max_context_words},
              {"coh_max_candidate_len", cfg.coh_max_candidate_len},
              {"learning_rate", cfg.learning_rate},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"holdout_fraction", cfg.holdout_fraction}};
}

ClassifierConfig classifier_config_from_json(const json& j) {
  ClassifierConfig cfg;
  cfg.style_emb_dim = j.at("style_emb_dim").get<int>();
  cfg.filter_widths = j.at("filter_widths").get<std::vector<int>>();
  cfg.filters_per_width = j.at("filters_per_width").get<int>();
  cfg.max_sentence_len = j.at("max_sentence_len").get<int>();
  cfg.coh_layers = j.at("coh_layers").get<int>();
  cfg.coh_heads = j.at("coh_heads").get<int>();
  cfg.coh_head_dim = j.at("coh_head_dim").get<int>();
  cfg.coh_ffn_dim = j.at("coh_ffn_dim").get<int>();
  cfg.coh_max_context_words = j.at("coh_max_context_words").get<int>();
  cfg.coh_max_candidate_len = j.at("coh_max_candidate_len").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.holdout_fraction = j.at("holdout_fraction").get<double>();
  return cfg;
}

json lm_config_to_json(const LmConfig& cfg) {
  return json{{"emb_dim", cfg.emb_dim},
              {"hidden_dim", cfg.hidden_dim},
              {"learning_rate", cfg.learning_rate},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"holdout_fraction", cfg.holdout_fraction}};
}

LmConfig lm_config_from_json(const json& j) {
  LmConfig cfg;
  cfg.emb_dim = j.at("emb_dim").get<int>();
  cfg.hidden_dim = j.at("hidden_dim").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.holdout_fraction = j.at("holdout_fraction").get<double>();
  return cfg;
}

json make_checkpoint(const std::string& kind, const json& config,
                     const nn::ParameterStore& params, const json& meta) {
  json out;
  out["schema_version"] = kCheckpointSchemaVersion;
  out["kind"] = kind;
  out["config"] = config;
  out["params"] = params_to_json(params);
  out["meta"] = meta;
  return out;
}

namespace {

void check_kind(const json& checkpoint, const std::string& kind) {
  const int schema = checkpoint.at("schema_version").get<int>();
  if (schema != kCheckpointSchemaVersion)
    throw DataError("unsupported checkpoint schema version " +
                    std::to_string(schema));
  const std::string got = checkpoint.at("kind").get<std::string>();
  if (got != kind)
    throw DataError("checkpoint kind is '" + got + "', expected '" + kind +
                    "'");
}

json vocab_size_holder(int vocab_size) {
  return json{{"vocab_size", vocab_size}};
}

}  // namespace

json model_checkpoint(const CastModel& model, const json& meta) {
  return make_checkpoint("cast_model", model_config_to_json(model.config()),
                         model.params(), meta);
}

CastModel load_model(const json& checkpoint) {
  check_kind(checkpoint, "cast_model");
  CastModel model(model_config_from_json(checkpoint.at("config")), /*seed=*/0);
  params_from_json(model.params(), checkpoint.at("params"));
  return model;
}

json style_classifier_checkpoint(const StyleClassifier& clf, const json& meta) {
  json cfg = classifier_config_to_json(clf.config());
  cfg.update(vocab_size_holder(clf.vocab_size()));
  return make_checkpoint("style_classifier", cfg, clf.params(), meta);
}

StyleClassifier load_style_classifier(const json& checkpoint) {
  check_kind(checkpoint, "style_classifier");
  const json& cfg = checkpoint.at("config");
  StyleClassifier clf(cfg.at("vocab_size").get<int>(),
                      classifier_config_from_json(cfg), /*seed=*/0);
  params_from_json(clf.params(), checkpoint.at("params"));
  clf.freeze();
  return clf;
}

json coherence_classifier_checkpoint(const CoherenceClassifier& clf,
                                     const json& meta) {
  json cfg = classifier_config_to_json(clf.config());
  cfg.update(vocab_size_holder(clf.vocab_size()));
  return make_checkpoint("coherence_classifier", cfg, clf.params(), meta);
}

CoherenceClassifier load_coherence_classifier(const json& checkpoint) {
  check_kind(checkpoint, "coherence_classifier");
  const json& cfg = checkpoint.at("config");
  CoherenceClassifier clf(cfg.at("vocab_size").get<int>(),
                          classifier_config_from_json(cfg), /*seed=*/0);
  params_from_json(clf.params(), checkpoint.at("params"));
  clf.freeze();
  return clf;
}

json lm_checkpoint(const PplLanguageModel& lm, const json& meta) {
  json cfg = lm_config_to_json(lm.config());
  cfg.update(vocab_size_holder(lm.vocab_size()));
  return make_checkpoint("ppl_lm", cfg, lm.params(), meta);
}

PplLanguageModel load_lm(const json& checkpoint) {
  check_kind(checkpoint, "ppl_lm");
  const json& cfg = checkpoint.at("config");
  PplLanguageModel lm(cfg.at("vocab_size").get<int>(),
                      lm_config_from_json(cfg), /*seed=*/0);
  params_from_json(lm.params(), checkpoint.at("params"));
  return lm;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump() << "\n";
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path, 0, std::string("invalid JSON: ") + e.what());
  }
  return j;
}

}  // namespace cast
