// Orchestration: hybrid batching, the optimizer loop, dev-set selection,
// checkpointing, and the ablation matrix.

#ifndef CAST_TRAINING_HPP
#define CAST_TRAINING_HPP

#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "cast/eval.hpp"
#include "cast/losses.hpp"

namespace cast {

struct TrainingConfig {
  int batch_size = 64;  // must be even: half parallel, half non-parallel
  double learning_rate = 5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int max_steps = 500;
  int eval_every = 50;
  std::uint64_t seed = 1;
  LossWeights weights;
  AblationSwitches ablation;
  GenMode gen_mode = GenMode::kHardSample;
  double gen_temperature = 1.0;
  bool btrans_first_hop_sample = true;
  bool btrans_stop_gradient = false;

  void validate() const;
  GenLossOptions gen_options(std::uint64_t step_seed) const;
};

struct HybridBatch {
  std::vector<int> parallel;     // indices into the parallel pool
  std::vector<int> nonparallel;  // indices into the non-parallel pool
  int epoch = 0;
};

// Deterministic stream of hybrid batches: each epoch covers the parallel
// pool once (remainder dropped) and down-samples the non-parallel pool to
// match the parallel pacing.
class HybridBatcher {
 public:
  HybridBatcher(int parallel_count, int nonparallel_count, int batch_size,
                std::uint64_t seed, bool use_nonparallel = true);

  HybridBatch next();
  int steps_per_epoch() const { return steps_per_epoch_; }

 private:
  void start_epoch();

  int parallel_count_;
  int nonparallel_count_;
  int half_;
  int steps_per_epoch_;
  bool use_nonparallel_;
  Rng rng_;
  int epoch_ = -1;
  int cursor_ = 0;
  std::vector<int> parallel_order_;
  std::vector<int> nonparallel_order_;
};

struct TrainState {
  CastModel model;
  nn::AdamOptimizer optimizer;
  std::int64_t step = 0;
  double best_dev_metric;
  std::int64_t best_step = -1;
  nlohmann::json best_checkpoint;

  TrainState(const ModelConfig& cfg, std::uint64_t model_seed,
             nn::AdamOptimizer::Options opt);
};

// One Adam update on the final objective; classifiers are never touched.
LossBreakdown train_step(TrainState& state,
                         const std::vector<EncodedParallel>& parallel_batch,
                         const std::vector<EncodedNonParallel>& nonparallel_batch,
                         const StyleClassifier* style_clf,
                         const CoherenceClassifier* coherence_clf,
                         const TrainingConfig& cfg);

struct TrainData {
  std::vector<EncodedParallel> parallel_train;
  std::vector<EncodedNonParallel> nonparallel_train;
  std::vector<ParallelSample> dev_raw;
  const Vocabulary* vocab = nullptr;
};

struct HistoryRecord {
  std::int64_t step = 0;
  double dev_style = 0.0;
  double dev_coherence = 0.0;
  double dev_bleu = 0.0;
  double selection = 0.0;  // (dev_bleu + dev_coherence) / 2
};

struct TrainLogs {
  std::ostream* losses = nullptr;   // one line per step, six scalars
  std::ostream* batches = nullptr;  // one line per step, sample indices
  std::ostream* history = nullptr;  // one line per dev evaluation
};

struct TrainResult {
  nlohmann::json best_checkpoint;
  std::vector<HistoryRecord> history;
  std::int64_t best_step = -1;
  double best_metric = 0.0;
  std::int64_t steps_run = 0;
};

std::vector<EncodedParallel> encode_parallel(
    const std::vector<ParallelSample>& samples, const Vocabulary& vocab,
    const ModelConfig& cfg);
std::vector<EncodedNonParallel> encode_nonparallel(
    const std::vector<NonParallelSample>& samples, const Vocabulary& vocab,
    const ModelConfig& cfg);

TrainResult train(const TrainingConfig& cfg, const ModelConfig& model_cfg,
                  const TrainData& data, const StyleClassifier* style_clf,
                  const CoherenceClassifier* coherence_clf,
                  TrainLogs logs = {});

struct AblationVariant {
  std::string name;
  AblationSwitches switches;
};

// full, w/o context encoder, w/o coherence classifier, w/o both,
// w/o non-parallel data
std::vector<AblationVariant> ablation_variants();

struct AblationRow {
  std::string name;
  AblationSwitches switches;
  EvalReport report;
};

std::vector<AblationRow> run_ablations(
    const TrainingConfig& base, const ModelConfig& model_cfg,
    const TrainData& data, const std::vector<ParallelSample>& test_raw,
    const StyleClassifier* style_clf, const CoherenceClassifier* coherence_clf,
    const PplLanguageModel* lm);

std::string format_ablation_table(const std::vector<AblationRow>& rows);

}  // namespace cast

#endif  // CAST_TRAINING_HPP
