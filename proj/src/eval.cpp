#include "cast/eval.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace cast {

using nn::Graph;
using nn::Mat;
using nn::Var;
using namespace nn;  // op library

namespace {

constexpr double kEpsilonCount = 1e-9;

using NgramCounts = std::map<std::vector<Token>, std::int64_t>;

NgramCounts ngram_counts(const TokenSeq& tokens, int n) {
  NgramCounts out;
  if (int(tokens.size()) < n) return out;
  for (std::size_t i = 0; i + std::size_t(n) <= tokens.size(); ++i)
    ++out[std::vector<Token>(tokens.begin() + std::ptrdiff_t(i),
                             tokens.begin() + std::ptrdiff_t(i + std::size_t(n)))];
  return out;
}

std::int64_t overlap(const NgramCounts& a, const NgramCounts& b) {
  std::int64_t total = 0;
  for (const auto& [g, c] : a) {
    auto it = b.find(g);
    if (it != b.end()) total += std::min(c, it->second);
  }
  return total;
}

std::int64_t total_count(const NgramCounts& a) {
  std::int64_t total = 0;
  for (const auto& [g, c] : a) total += c;
  return total;
}

double brevity_penalty(std::int64_t hyp_len, std::int64_t ref_len) {
  if (hyp_len >= ref_len) return 1.0;
  if (hyp_len == 0) return 0.0;
  return std::exp(1.0 - double(ref_len) / double(hyp_len));
}

double geometric_score(const std::vector<std::int64_t>& matches,
                       const std::vector<std::int64_t>& totals,
                       double bp) {
  double log_sum = 0.0;
  int included = 0;
  for (std::size_t n = 0; n < totals.size(); ++n) {
    if (totals[n] == 0) continue;  // no hypothesis n-grams of this order
    const double num = matches[n] > 0 ? double(matches[n]) : kEpsilonCount;
    log_sum += std::log(num / double(totals[n]));
    ++included;
  }
  if (included == 0) return 0.0;
  return 100.0 * bp * std::exp(log_sum / double(included));
}

}  // namespace

double bleu(const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, int max_order) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("bleu: empty input");
  if (max_order < 1) throw std::invalid_argument("bleu: max_order must be >= 1");

  std::vector<std::int64_t> matches(std::size_t(max_order), 0);
  std::vector<std::int64_t> totals(std::size_t(max_order), 0);
  std::int64_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += std::int64_t(hypotheses[i].size());
    ref_len += std::int64_t(references[i].size());
    for (int n = 1; n <= max_order; ++n) {
      const NgramCounts h = ngram_counts(hypotheses[i], n);
      const NgramCounts r = ngram_counts(references[i], n);
      matches[std::size_t(n - 1)] += overlap(h, r);
      totals[std::size_t(n - 1)] += total_count(h);
    }
  }
  return geometric_score(matches, totals, brevity_penalty(hyp_len, ref_len));
}

double gleu(const std::vector<TokenSeq>& sources,
            const std::vector<TokenSeq>& hypotheses,
            const std::vector<TokenSeq>& references, int max_order) {
  if (sources.size() != hypotheses.size() ||
      hypotheses.size() != references.size())
    throw std::invalid_argument("gleu: input count mismatch");
  if (hypotheses.empty()) throw std::invalid_argument("gleu: empty input");

  std::vector<std::int64_t> numerators(std::size_t(max_order), 0);
  std::vector<std::int64_t> totals(std::size_t(max_order), 0);
  std::int64_t hyp_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    hyp_len += std::int64_t(hypotheses[i].size());
    ref_len += std::int64_t(references[i].size());
    for (int n = 1; n <= max_order; ++n) {
      const NgramCounts h = ngram_counts(hypotheses[i], n);
      const NgramCounts r = ngram_counts(references[i], n);
      const NgramCounts s = ngram_counts(sources[i], n);
      // multiset difference: source n-grams not covered by the reference
      NgramCounts s_minus_r;
      for (const auto& [g, c] : s) {
        auto it = r.find(g);
        const std::int64_t keep = c - (it == r.end() ? 0 : it->second);
        if (keep > 0) s_minus_r[g] = keep;
      }
      const std::int64_t reward = overlap(h, r);
      const std::int64_t penalty = overlap(h, s_minus_r);
      numerators[std::size_t(n - 1)] += std::max<std::int64_t>(0, reward - penalty);
      totals[std::size_t(n - 1)] += total_count(h);
    }
  }
  return geometric_score(numerators, totals, brevity_penalty(hyp_len, ref_len));
}

// ---- LSTM language model ---------------------------------------------------

PplLanguageModel::PplLanguageModel(int vocab_size, const LmConfig& cfg,
                                   std::uint64_t seed)
    : vocab_size_(vocab_size), cfg_(cfg) {
  if (vocab_size_ <= Vocabulary::kNumSpecials)
    throw ConfigError("language model: vocab too small");
  Rng rng(seed);
  emb_ = &params_.create("emb", vocab_size_, cfg_.emb_dim, rng);
  wx_ = &params_.create("lstm.wx", cfg_.emb_dim, 4 * cfg_.hidden_dim, rng);
  wh_ = &params_.create("lstm.wh", cfg_.hidden_dim, 4 * cfg_.hidden_dim, rng);
  b_ = &params_.create_zero("lstm.b", 1, 4 * cfg_.hidden_dim);
  out_.init(params_, "out", cfg_.hidden_dim, vocab_size_, rng);
}

Var PplLanguageModel::sentence_nll(Graph& g, const IdSeq& sentence) const {
  const int h = cfg_.hidden_dim;
  IdSeq inputs{Vocabulary::kBos};
  inputs.insert(inputs.end(), sentence.begin(), sentence.end());
  IdSeq targets = sentence;
  targets.push_back(Vocabulary::kEos);

  Var wx = g.param(*wx_), wh = g.param(*wh_), bias = g.param(*b_);
  Var emb = g.param(*emb_);
  Var hidden = g.constant(Mat::Zero(1, h));
  Var cell = g.constant(Mat::Zero(1, h));

  std::vector<Var> state_rows;
  state_rows.reserve(inputs.size());
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Var x = rows(emb, IdSeq{inputs[t]});
    Var pre = add(add_rowvec(matmul(x, wx), bias), matmul(hidden, wh));
    Var gi = sigmoid(slice_cols(pre, 0, h));
    Var gf = sigmoid(slice_cols(pre, h, h));
    Var gc = cast::nn::tanh(slice_cols(pre, 2 * h, h));
    Var go = sigmoid(slice_cols(pre, 3 * h, h));
    cell = add(cmult(gf, cell), cmult(gi, gc));
    hidden = cmult(go, cast::nn::tanh(cell));
    state_rows.push_back(hidden);
  }
  Var states =
      state_rows.size() == 1 ? state_rows[0] : concat_rows(state_rows);
  Var lsm = log_softmax_rows(out_.apply(g, states));
  return scale(sum_all(pick_elems(lsm, targets)), -1.0);
}

double PplLanguageModel::sentence_nll(const IdSeq& sentence) const {
  Graph g;
  return scalar_value(sentence_nll(g, sentence));
}

PplLanguageModel train_ppl_lm(const std::vector<IdSeq>& sentences,
                              int vocab_size, const LmConfig& cfg,
                              std::uint64_t seed, LmReport* report) {
  if (sentences.empty())
    throw std::invalid_argument("train_ppl_lm: no sentences");
  Rng rng(seed);
  PplLanguageModel lm(vocab_size, cfg, rng.child(1).seed());
  AdamOptimizer opt({cfg.learning_rate, 0.9, 0.999, 1e-8});

  std::vector<std::size_t> idx(sentences.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  rng.shuffle(idx);
  std::size_t hold = std::size_t(double(idx.size()) * cfg.holdout_fraction);
  if (hold == 0 && idx.size() > 1) hold = 1;
  std::vector<std::size_t> hold_idx(idx.begin(), idx.begin() + std::ptrdiff_t(hold));
  std::vector<std::size_t> train_idx(idx.begin() + std::ptrdiff_t(hold), idx.end());
  if (train_idx.empty())
    throw std::invalid_argument("train_ppl_lm: no training data left");

  LmReport rep;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(train_idx);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < train_idx.size();
         at += std::size_t(cfg.batch_size)) {
      const std::size_t end =
          std::min(train_idx.size(), at + std::size_t(cfg.batch_size));
      Graph g;
      Var total{};
      for (std::size_t i = at; i < end; ++i) {
        Var nll = lm.sentence_nll(g, sentences[train_idx[i]]);
        total = total.valid() ? add(total, nll) : nll;
      }
      Var loss = scale(total, 1.0 / double(end - at));
      lm.params().zero_grads();
      g.backward(loss);
      opt.step(lm.params());
      epoch_loss += scalar_value(loss);
      ++batches;
    }
    rep.epoch_losses.push_back(epoch_loss /
                               double(std::max<std::size_t>(1, batches)));
  }
  if (!hold_idx.empty()) {
    std::vector<IdSeq> held;
    held.reserve(hold_idx.size());
    for (std::size_t i : hold_idx) held.push_back(sentences[i]);
    rep.held_out_perplexity = perplexity(lm, held);
  }
  if (report) *report = rep;
  return lm;
}

double perplexity(const PplLanguageModel& lm,
                  const std::vector<IdSeq>& hypotheses) {
  if (hypotheses.empty())
    throw std::invalid_argument("perplexity: no hypotheses");
  double total_nll = 0.0;
  std::int64_t total_tokens = 0;
  for (const auto& h : hypotheses) {
    total_nll += lm.sentence_nll(h);
    total_tokens += std::int64_t(h.size()) + 1;  // EOS counted
  }
  return std::exp(total_nll / double(total_tokens));
}

// ---- accuracies and the full report ------------------------------------------

double classifier_accuracy(const StyleClassifier& clf,
                           const std::vector<IdSeq>& sentences,
                           const std::vector<StyleLabel>& expected) {
  if (sentences.size() != expected.size())
    throw std::invalid_argument("classifier_accuracy: length mismatch");
  if (sentences.empty())
    throw std::invalid_argument("classifier_accuracy: empty input");
  int correct = 0;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    if (clf.predict(sentences[i]) == expected[i]) ++correct;
  return 100.0 * double(correct) / double(sentences.size());
}

double classifier_accuracy(const CoherenceClassifier& clf,
                           const std::vector<EncodedCoherencePair>& inputs,
                           const std::vector<int>& expected) {
  if (inputs.size() != expected.size())
    throw std::invalid_argument("classifier_accuracy: length mismatch");
  if (inputs.empty())
    throw std::invalid_argument("classifier_accuracy: empty input");
  int correct = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    if (clf.predict(inputs[i].before, inputs[i].after, inputs[i].candidate) ==
        expected[i])
      ++correct;
  return 100.0 * double(correct) / double(inputs.size());
}

EvalReport evaluate_model(const CastModel& model,
                          const StyleClassifier& style_clf,
                          const CoherenceClassifier& coherence_clf,
                          const PplLanguageModel* lm,
                          const std::vector<ParallelSample>& test,
                          const Vocabulary& vocab, bool use_context) {
  if (test.empty()) throw std::invalid_argument("evaluate_model: empty split");

  EvalReport report;
  report.count = int(test.size());
  std::vector<TokenSeq> sources, hyps, refs;
  std::vector<IdSeq> hyp_ids;
  int style_hits = 0, coherent_hits = 0;

  GenOptions opts{GenMode::kGreedy, model.config().max_sentence_len, 1.0};
  for (const auto& sample : test) {
    EncodedParallel enc = encode_sample(sample, vocab, model.config());
    Graph g;
    GeneratedSequence gen = model.transfer(
        g, enc.source, enc.context_flat, enc.target_style, opts, nullptr,
        use_context);

    EvalExample ex;
    ex.source = sample.source;
    ex.reference = sample.reference;
    ex.hypothesis = vocab.decode(gen.token_ids, /*display=*/true);
    ex.style_correct = style_clf.predict(gen.token_ids) == enc.target_style;
    ex.coherence_prob = std::exp(coherence_clf.coherence_log_prob(
        enc.context_before_flat, enc.context_after_flat, gen.token_ids));
    ex.coherent = coherence_clf.predict(enc.context_before_flat,
                                        enc.context_after_flat,
                                        gen.token_ids) == 1;
    style_hits += ex.style_correct ? 1 : 0;
    coherent_hits += ex.coherent ? 1 : 0;

    sources.push_back(sample.source);
    refs.push_back(sample.reference);
    hyps.push_back(ex.hypothesis);
    hyp_ids.push_back(gen.token_ids);
    report.examples.push_back(std::move(ex));
  }

  report.style_accuracy = 100.0 * double(style_hits) / double(test.size());
  report.coherence_accuracy =
      100.0 * double(coherent_hits) / double(test.size());
  report.bleu = bleu(hyps, refs);
  report.gleu = gleu(sources, hyps, refs);
  if (lm != nullptr) report.perplexity = perplexity(*lm, hyp_ids);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["style_accuracy"] = report.style_accuracy;
  j["coherence_accuracy"] = report.coherence_accuracy;
  j["bleu"] = report.bleu;
  j["gleu"] = report.gleu;
  if (!std::isnan(report.perplexity)) j["perplexity"] = report.perplexity;
  j["count"] = report.count;
  nlohmann::json examples = nlohmann::json::array();
  for (const auto& ex : report.examples) {
    nlohmann::json e;
    e["source"] = ex.source;
    e["reference"] = ex.reference;
    e["hypothesis"] = ex.hypothesis;
    e["style_correct"] = ex.style_correct;
    e["coherent"] = ex.coherent;
    e["coherence_prob"] = ex.coherence_prob;
    examples.push_back(std::move(e));
  }
  j["examples"] = std::move(examples);
  return j;
}

std::string format_report_table(const EvalReport& report,
                                const std::string& row_label) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %8s %10s %8s %8s %10s\n",
                "Model", "Acc.", "Coherence", "BLEU", "GLEU", "PPL");
  os << line;
  if (std::isnan(report.perplexity))
    std::snprintf(line, sizeof(line), "%-24s %8.2f %10.2f %8.2f %8.2f %10s\n",
                  row_label.c_str(), report.style_accuracy,
                  report.coherence_accuracy, report.bleu, report.gleu, "-");
  else
    std::snprintf(line, sizeof(line), "%-24s %8.2f %10.2f %8.2f %8.2f %10.2f\n",
                  row_label.c_str(), report.style_accuracy,
                  report.coherence_accuracy, report.bleu, report.gleu,
                  report.perplexity);
  os << line;
  return os.str();
}

}  // namespace cast
