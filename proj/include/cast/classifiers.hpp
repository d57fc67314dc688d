// The two frozen regularizers: a CNN sentence style classifier and a
// transformer-encoder coherence classifier, each with a pre-training
// routine. Both accept discrete token ids or continuous vocabulary
// distributions, so generator gradients can flow through them.

#ifndef CAST_CLASSIFIERS_HPP
#define CAST_CLASSIFIERS_HPP

#include "cast/corpus.hpp"
#include "cast/layers.hpp"
#include "cast/vocab.hpp"

namespace cast {

struct ClassifierConfig {
  // CNN style classifier
  int style_emb_dim = 32;
  std::vector<int> filter_widths = {2, 3, 4};
  int filters_per_width = 32;
  int max_sentence_len = 32;

  // coherence encoder
  int coh_layers = 1;
  int coh_heads = 2;
  int coh_head_dim = 16;
  int coh_ffn_dim = 64;
  int coh_max_context_words = 50;
  int coh_max_candidate_len = 32;

  // shared pre-training recipe
  double learning_rate = 1e-3;
  int epochs = 6;
  int batch_size = 32;
  double holdout_fraction = 0.1;
  // coherence head is held at its random init for this many epochs so the
  // encoder receives a stable gradient direction before the head moves
  int coh_head_warmup_epochs = 2;
  // causal next-token pre-training of the coherence encoder before the
  // binary head is trained; builds topic-aware embeddings
  int coh_lm_epochs = 4;
  // restart budget and the training-loss threshold that marks a run as
  // escaped from the constant-predictor basin
  int coh_restarts = 5;
  double coh_collapse_loss = 0.45;

  int coh_width() const { return coh_heads * coh_head_dim; }
};

struct PretrainReport {
  double held_out_accuracy = 0.0;   // percent
  std::vector<double> epoch_losses; // mean training loss per epoch
  int train_size = 0;
  int held_out_size = 0;
  int restart_index = 0;  // which restart produced the kept classifier
};

class StyleClassifier {
 public:
  StyleClassifier(int vocab_size, const ClassifierConfig& cfg,
                  std::uint64_t seed);

  // 1x2 logits; discrete path
  nn::Var logits(nn::Graph& g, const IdSeq& sentence) const;
  // continuous path: rows are distributions over the vocabulary
  nn::Var logits(nn::Graph& g, nn::Var vocab_dists) const;

  nn::Var log_probs(nn::Graph& g, const IdSeq& sentence) const;
  nn::Var log_probs(nn::Graph& g, nn::Var vocab_dists) const;

  // convenience: runs its own graph
  double style_log_prob(const IdSeq& sentence, StyleLabel label) const;
  StyleLabel predict(const IdSeq& sentence) const;

  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  int vocab_size() const { return vocab_size_; }
  const ClassifierConfig& config() const { return cfg_; }

 private:
  nn::Var embedded_to_logits(nn::Graph& g, nn::Var embedded) const;
  nn::Var pad_embedded(nn::Graph& g, nn::Var embedded) const;

  int vocab_size_;
  ClassifierConfig cfg_;
  nn::ParameterStore params_;
  nn::Parameter* emb_ = nullptr;
  std::vector<nn::LinearLayer> conv_;  // one per filter width
  nn::LinearLayer head_;
  bool frozen_ = false;
};

class CoherenceClassifier {
 public:
  CoherenceClassifier(int vocab_size, const ClassifierConfig& cfg,
                      std::uint64_t seed);

  // 1x2 log probabilities over s: column 0 = p(s=0), column 1 = p(s=1).
  // The candidate is inserted at the hole between before/after.
  nn::Var log_probs(nn::Graph& g, const IdSeq& before, const IdSeq& after,
                    const IdSeq& candidate) const;
  nn::Var log_probs(nn::Graph& g, const IdSeq& before, const IdSeq& after,
                    nn::Var candidate_dists) const;

  // causal next-token loss over a token stream; used by pre-training
  nn::Var lm_loss(nn::Graph& g, const IdSeq& stream) const;

  double coherence_log_prob(const IdSeq& before, const IdSeq& after,
                            const IdSeq& candidate) const;  // log p(s=1)
  int predict(const IdSeq& before, const IdSeq& after,
              const IdSeq& candidate) const;

  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  bool frozen() const { return frozen_; }
  void freeze() { frozen_ = true; }
  int vocab_size() const { return vocab_size_; }
  const ClassifierConfig& config() const { return cfg_; }

 private:
  nn::Var paragraph_logits(nn::Graph& g, const IdSeq& before,
                           const IdSeq& after, nn::Var candidate_embedded,
                           std::ptrdiff_t candidate_len) const;

  int vocab_size_;
  ClassifierConfig cfg_;
  nn::ParameterStore params_;
  nn::Parameter* emb_ = nullptr;
  nn::Parameter* seg_emb_ = nullptr;  // 2 x width: context vs candidate
  nn::TransformerEncoder encoder_;
  nn::LinearLayer lm_head_;           // next-token head, pre-training only
  nn::Parameter* head_w_ = nullptr;   // width x 2
  nn::Parameter* head_b_ = nullptr;   // 1 x 2
  nn::Mat positions_;
  bool frozen_ = false;
};

// Encoded coherence pair, the unit the pre-trainer and accuracy metric use.
struct EncodedCoherencePair {
  IdSeq before;
  IdSeq after;
  IdSeq candidate;
  int label = 0;
};

EncodedCoherencePair encode_pair(const CoherencePair& pair,
                                 const Vocabulary& vocab,
                                 const ClassifierConfig& cfg);

// Cross-entropy pre-training; the returned classifier is frozen.
StyleClassifier pretrain_style_classifier(
    const std::vector<NonParallelSample>& data, const Vocabulary& vocab,
    const ClassifierConfig& cfg, std::uint64_t seed, PretrainReport* report);

CoherenceClassifier pretrain_coherence_classifier(
    const std::vector<CoherencePair>& pairs, const Vocabulary& vocab,
    const ClassifierConfig& cfg, std::uint64_t seed, PretrainReport* report);

}  // namespace cast

#endif  // CAST_CLASSIFIERS_HPP
