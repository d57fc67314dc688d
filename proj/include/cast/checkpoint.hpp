// Versioned JSON checkpoint archives: parameter tensors + component config
// + the provenance metadata every artifact carries.

#ifndef CAST_CHECKPOINT_HPP
#define CAST_CHECKPOINT_HPP

#include <json.hpp>

#include "cast/classifiers.hpp"
#include "cast/eval.hpp"
#include "cast/model.hpp"

namespace cast {

constexpr int kCheckpointSchemaVersion = 1;

nlohmann::json params_to_json(const nn::ParameterStore& store);
void params_from_json(nn::ParameterStore& store, const nlohmann::json& j);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);
nlohmann::json classifier_config_to_json(const ClassifierConfig& cfg);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j);
nlohmann::json lm_config_to_json(const LmConfig& cfg);
LmConfig lm_config_from_json(const nlohmann::json& j);

// kind is one of "cast_model", "style_classifier", "coherence_classifier",
// "ppl_lm"
nlohmann::json make_checkpoint(const std::string& kind,
                               const nlohmann::json& config,
                               const nn::ParameterStore& params,
                               const nlohmann::json& meta);

nlohmann::json model_checkpoint(const CastModel& model,
                                const nlohmann::json& meta);
CastModel load_model(const nlohmann::json& checkpoint);

nlohmann::json style_classifier_checkpoint(const StyleClassifier& clf,
                                           const nlohmann::json& meta);
StyleClassifier load_style_classifier(const nlohmann::json& checkpoint);

nlohmann::json coherence_classifier_checkpoint(const CoherenceClassifier& clf,
                                               const nlohmann::json& meta);
CoherenceClassifier load_coherence_classifier(const nlohmann::json& checkpoint);

nlohmann::json lm_checkpoint(const PplLanguageModel& lm,
                             const nlohmann::json& meta);
PplLanguageModel load_lm(const nlohmann::json& checkpoint);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace cast

#endif  // CAST_CHECKPOINT_HPP
