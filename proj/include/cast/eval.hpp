// Automatic metrics: BLEU, GLEU (the error-correction variant), perplexity
// under a word-level LSTM language model, classifier accuracies, and the
// full evaluation report.

#ifndef CAST_EVAL_HPP
#define CAST_EVAL_HPP

#include <cmath>

#include <json.hpp>

#include "cast/classifiers.hpp"
#include "cast/model.hpp"

namespace cast {

// Corpus-level BLEU-4 with brevity penalty. Zero n-gram matches are
// epsilon-substituted (1e-9); orders with no hypothesis n-grams at all are
// dropped from the geometric mean. Returns 0..100.
double bleu(const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, int max_order = 4);

// GLEU as defined for grammatical error correction: n-gram matches with the
// reference minus hypothesis n-grams that appear in the source but not the
// reference. Same epsilon and brevity-penalty conventions as bleu().
double gleu(const std::vector<TokenSeq>& sources,
            const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, int max_order = 4);

struct LmConfig {
  int emb_dim = 32;
  int hidden_dim = 64;
  double learning_rate = 1e-3;
  int epochs = 4;
  int batch_size = 16;
  double holdout_fraction = 0.05;
};

struct LmReport {
  double held_out_perplexity = 0.0;
  std::vector<double> epoch_losses;
};

// Single-layer word-level LSTM language model.
class PplLanguageModel {
 public:
  PplLanguageModel(int vocab_size, const LmConfig& cfg, std::uint64_t seed);

  // teacher-forced negative log-likelihood of BOS -> tokens -> EOS
  double sentence_nll(const IdSeq& sentence) const;
  nn::Var sentence_nll(nn::Graph& g, const IdSeq& sentence) const;

  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }
  int vocab_size() const { return vocab_size_; }
  const LmConfig& config() const { return cfg_; }

 private:
  int vocab_size_;
  LmConfig cfg_;
  nn::ParameterStore params_;
  nn::Parameter* emb_ = nullptr;
  nn::Parameter* wx_ = nullptr;   // emb x 4h
  nn::Parameter* wh_ = nullptr;   // h x 4h
  nn::Parameter* b_ = nullptr;    // 1 x 4h
  nn::LinearLayer out_;
};

PplLanguageModel train_ppl_lm(const std::vector<IdSeq>& sentences,
                              int vocab_size, const LmConfig& cfg,
                              std::uint64_t seed, LmReport* report);

// exp(total NLL / total token count), EOS included in the count.
double perplexity(const PplLanguageModel& lm,
                  const std::vector<IdSeq>& hypotheses);

// Percent of argmax predictions equal to the expected labels.
double classifier_accuracy(const StyleClassifier& clf,
                           const std::vector<IdSeq>& sentences,
                           const std::vector<StyleLabel>& expected);
double classifier_accuracy(const CoherenceClassifier& clf,
                           const std::vector<EncodedCoherencePair>& inputs,
                           const std::vector<int>& expected);

struct EvalExample {
  TokenSeq source;
  TokenSeq reference;
  TokenSeq hypothesis;
  bool style_correct = false;
  bool coherent = false;
  double coherence_prob = 0.0;
};

struct EvalReport {
  double style_accuracy = 0.0;    // percent
  double coherence_accuracy = 0.0;
  double bleu = 0.0;
  double gleu = 0.0;
  double perplexity = std::nan("");  // NaN when no LM was supplied
  int count = 0;
  std::vector<EvalExample> examples;
};

// Greedy transfer of every test source with its context, then all metrics.
EvalReport evaluate_model(const CastModel& model, const StyleClassifier& style_clf,
                          const CoherenceClassifier& coherence_clf,
                          const PplLanguageModel* lm,
                          const std::vector<ParallelSample>& test,
                          const Vocabulary& vocab, bool use_context = true);

nlohmann::json report_to_json(const EvalReport& report);
std::string format_report_table(const EvalReport& report,
                                const std::string& row_label);

}  // namespace cast

#endif  // CAST_EVAL_HPP
