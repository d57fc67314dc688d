#include "cast/training.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "cast/checkpoint.hpp"

namespace cast {

void TrainingConfig::validate() const {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw ConfigError("batch_size must be even and >= 2");
  if (!(learning_rate >= 0.0))
    throw ConfigError("learning_rate must be >= 0");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  weights.validate();
}

GenLossOptions TrainingConfig::gen_options(std::uint64_t step_seed) const {
  GenLossOptions opts;
  opts.mode = gen_mode;
  opts.temperature = gen_temperature;
  opts.max_len = 0;
  opts.seed = step_seed;
  opts.btrans_first_hop_sample = btrans_first_hop_sample;
  opts.btrans_stop_gradient = btrans_stop_gradient;
  return opts;
}

HybridBatcher::HybridBatcher(int parallel_count, int nonparallel_count,
                             int batch_size, std::uint64_t seed,
                             bool use_nonparallel)
    : parallel_count_(parallel_count),
      nonparallel_count_(nonparallel_count),
      half_(batch_size / 2),
      use_nonparallel_(use_nonparallel),
      rng_(splitmix64(seed ^ 0x6261746368ULL)) {
  if (batch_size < 2 || batch_size % 2 != 0)
    throw std::invalid_argument("batch_size must be even and >= 2");
  if (parallel_count_ < half_)
    throw std::invalid_argument(
        "parallel pool smaller than half a batch; nothing to train on");
  if (use_nonparallel_ && nonparallel_count_ < 1)
    throw std::invalid_argument("non-parallel pool is empty");
  steps_per_epoch_ = parallel_count_ / half_;
}

void HybridBatcher::start_epoch() {
  ++epoch_;
  cursor_ = 0;
  parallel_order_.resize(std::size_t(parallel_count_));
  for (int i = 0; i < parallel_count_; ++i)
    parallel_order_[std::size_t(i)] = i;
  rng_.shuffle(parallel_order_);

  if (use_nonparallel_) {
    // down-sample (or cycle) the non-parallel pool to the parallel pacing
    const int need = steps_per_epoch_ * half_;
    nonparallel_order_.clear();
    nonparallel_order_.reserve(std::size_t(need));
    while (int(nonparallel_order_.size()) < need) {
      std::vector<int> pool(static_cast<std::size_t>(nonparallel_count_));
      for (int i = 0; i < nonparallel_count_; ++i) pool[std::size_t(i)] = i;
      rng_.shuffle(pool);
      for (int i : pool) {
        if (int(nonparallel_order_.size()) == need) break;
        nonparallel_order_.push_back(i);
      }
    }
  }
}

HybridBatch HybridBatcher::next() {
  if (epoch_ < 0 || cursor_ >= steps_per_epoch_) start_epoch();
  HybridBatch batch;
  batch.epoch = epoch_;
  const int at = cursor_ * half_;
  batch.parallel.assign(
      parallel_order_.begin() + at,
      parallel_order_.begin() + at + half_);
  if (use_nonparallel_)
    batch.nonparallel.assign(nonparallel_order_.begin() + at,
                             nonparallel_order_.begin() + at + half_);
  ++cursor_;
  return batch;
}

TrainState::TrainState(const ModelConfig& cfg, std::uint64_t model_seed,
                       nn::AdamOptimizer::Options opt)
    : model(cfg, model_seed),
      optimizer(opt),
      best_dev_metric(-std::numeric_limits<double>::infinity()) {}

LossBreakdown train_step(TrainState& state,
                         const std::vector<EncodedParallel>& parallel_batch,
                         const std::vector<EncodedNonParallel>& nonparallel_batch,
                         const StyleClassifier* style_clf,
                         const CoherenceClassifier* coherence_clf,
                         const TrainingConfig& cfg) {
  const std::uint64_t step_seed =
      splitmix64(cfg.seed ^ (std::uint64_t(state.step) * 0x9e3779b97f4a7c15ULL));
  nn::Graph g;
  FinalLoss loss =
      final_loss(g, state.model, style_clf, coherence_clf, parallel_batch,
                 nonparallel_batch, cfg.weights, cfg.gen_options(step_seed),
                 cfg.ablation);
  if (!std::isfinite(loss.values.final)) {
    std::ostringstream os;
    os << "non-finite loss at step " << state.step << ": c_s2s="
       << loss.values.c_s2s << " cohere=" << loss.values.cohere
       << " recon=" << loss.values.recon << " btrans=" << loss.values.btrans
       << " style=" << loss.values.style;
    throw std::runtime_error(os.str());
  }
  state.model.params().zero_grads();
  g.backward(loss.total);
  state.optimizer.step(state.model.params());
  ++state.step;
  return loss.values;
}

std::vector<EncodedParallel> encode_parallel(
    const std::vector<ParallelSample>& samples, const Vocabulary& vocab,
    const ModelConfig& cfg) {
  std::vector<EncodedParallel> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode_sample(s, vocab, cfg));
  return out;
}

std::vector<EncodedNonParallel> encode_nonparallel(
    const std::vector<NonParallelSample>& samples, const Vocabulary& vocab,
    const ModelConfig& cfg) {
  std::vector<EncodedNonParallel> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(encode_sample(s, vocab, cfg));
  return out;
}

namespace {

void log_batch(std::ostream* os, std::int64_t step, const HybridBatch& batch) {
  if (!os) return;
  *os << "step=" << step << " epoch=" << batch.epoch << " parallel=";
  for (std::size_t i = 0; i < batch.parallel.size(); ++i)
    *os << (i ? "," : "") << batch.parallel[i];
  *os << " nonparallel=";
  for (std::size_t i = 0; i < batch.nonparallel.size(); ++i)
    *os << (i ? "," : "") << batch.nonparallel[i];
  *os << "\n";
}

void log_losses(std::ostream* os, std::int64_t step, const LossBreakdown& b) {
  if (!os) return;
  char line[512];
  std::snprintf(line, sizeof(line),
                "step=%" PRId64
                " c_s2s=%.17g cohere=%.17g recon=%.17g btrans=%.17g "
                "style=%.17g final=%.17g\n",
                step, b.c_s2s, b.cohere, b.recon, b.btrans, b.style, b.final);
  *os << line;
}

void log_history(std::ostream* os, const HistoryRecord& r) {
  if (!os) return;
  char line[512];
  std::snprintf(line, sizeof(line),
                "step=%" PRId64
                " dev_style=%.17g dev_coherence=%.17g dev_bleu=%.17g "
                "selection=%.17g\n",
                r.step, r.dev_style, r.dev_coherence, r.dev_bleu, r.selection);
  *os << line;
}

}  // namespace

TrainResult train(const TrainingConfig& cfg, const ModelConfig& model_cfg,
                  const TrainData& data, const StyleClassifier* style_clf,
                  const CoherenceClassifier* coherence_clf, TrainLogs logs) {
  cfg.validate();
  model_cfg.validate();
  if (data.vocab == nullptr)
    throw std::invalid_argument("train: vocabulary required");
  if (style_clf == nullptr || coherence_clf == nullptr)
    throw std::invalid_argument("train: pre-trained classifiers required");
  if (!style_clf->frozen() || !coherence_clf->frozen())
    throw std::runtime_error("train: classifiers must be frozen");

  TrainState state(model_cfg, splitmix64(cfg.seed ^ 0x6d6f64656cULL),
                   {cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2,
                    cfg.adam_epsilon});
  HybridBatcher batcher(int(data.parallel_train.size()),
                        int(data.nonparallel_train.size()), cfg.batch_size,
                        cfg.seed, cfg.ablation.use_nonparallel);

  auto snapshot = [&](double metric) {
    nlohmann::json meta;
    meta["step"] = state.step;
    meta["selection_metric"] = metric;
    meta["seed"] = cfg.seed;
    state.best_checkpoint = model_checkpoint(state.model, meta);
    state.best_dev_metric = metric;
    state.best_step = state.step;
  };

  auto evaluate_dev = [&]() -> HistoryRecord {
    EvalReport report = evaluate_model(
        state.model, *style_clf, *coherence_clf, /*lm=*/nullptr, data.dev_raw,
        *data.vocab, cfg.ablation.use_context_encoder);
    HistoryRecord rec;
    rec.step = state.step;
    rec.dev_style = report.style_accuracy;
    rec.dev_coherence = report.coherence_accuracy;
    rec.dev_bleu = report.bleu;
    rec.selection = (report.bleu + report.coherence_accuracy) / 2.0;
    return rec;
  };

  TrainResult result;
  for (int s = 0; s < cfg.max_steps; ++s) {
    HybridBatch batch = batcher.next();
    log_batch(logs.batches, state.step, batch);

    std::vector<EncodedParallel> pb;
    pb.reserve(batch.parallel.size());
    for (int i : batch.parallel)
      pb.push_back(data.parallel_train[std::size_t(i)]);
    std::vector<EncodedNonParallel> ub;
    ub.reserve(batch.nonparallel.size());
    for (int i : batch.nonparallel)
      ub.push_back(data.nonparallel_train[std::size_t(i)]);

    const std::int64_t logged_step = state.step;
    LossBreakdown breakdown =
        train_step(state, pb, ub, style_clf, coherence_clf, cfg);
    log_losses(logs.losses, logged_step, breakdown);

    if ((s + 1) % cfg.eval_every == 0) {
      HistoryRecord rec = evaluate_dev();
      result.history.push_back(rec);
      log_history(logs.history, rec);
      if (rec.selection > state.best_dev_metric) snapshot(rec.selection);
    }
  }

  if (result.history.empty()) {
    // no scheduled evaluation ran; keep the final model
    HistoryRecord rec = evaluate_dev();
    if (rec.selection > state.best_dev_metric) snapshot(rec.selection);
  }

  result.best_checkpoint = state.best_checkpoint;
  result.best_step = state.best_step;
  result.best_metric = state.best_dev_metric;
  result.steps_run = state.step;
  return result;
}

std::vector<AblationVariant> ablation_variants() {
  return {
      {"CAST", {true, true, true}},
      {"w/o context encoder", {false, true, true}},
      {"w/o cohere. classifier", {true, false, true}},
      {"w/o both", {false, false, true}},
      {"w/o non-parallel data", {true, true, false}},
  };
}

std::vector<AblationRow> run_ablations(
    const TrainingConfig& base, const ModelConfig& model_cfg,
    const TrainData& data, const std::vector<ParallelSample>& test_raw,
    const StyleClassifier* style_clf, const CoherenceClassifier* coherence_clf,
    const PplLanguageModel* lm) {
  std::vector<AblationRow> rows;
  for (const AblationVariant& variant : ablation_variants()) {
    TrainingConfig cfg = base;
    cfg.ablation = variant.switches;
    TrainResult result =
        train(cfg, model_cfg, data, style_clf, coherence_clf, {});
    CastModel best = load_model(result.best_checkpoint);
    AblationRow row;
    row.name = variant.name;
    row.switches = variant.switches;
    row.report =
        evaluate_model(best, *style_clf, *coherence_clf, lm, test_raw,
                       *data.vocab, variant.switches.use_context_encoder);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_ablation_table(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %8s %10s %8s %8s %10s\n", "Model",
                "Acc.", "Coherence", "BLEU", "GLEU", "PPL");
  os << line;
  for (const auto& row : rows) {
    if (std::isnan(row.report.perplexity))
      std::snprintf(line, sizeof(line),
                    "%-24s %8.2f %10.2f %8.2f %8.2f %10s\n", row.name.c_str(),
                    row.report.style_accuracy, row.report.coherence_accuracy,
                    row.report.bleu, row.report.gleu, "-");
    else
      std::snprintf(line, sizeof(line),
                    "%-24s %8.2f %10.2f %8.2f %8.2f %10.2f\n",
                    row.name.c_str(), row.report.style_accuracy,
                    row.report.coherence_accuracy, row.report.bleu,
                    row.report.gleu, row.report.perplexity);
    os << line;
  }
  return os.str();
}

}  // namespace cast
