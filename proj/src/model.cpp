#include "cast/model.hpp"

#include <algorithm>

namespace cast {

using nn::Graph;
using nn::Mat;
using nn::Var;
using namespace nn;  // op library

void ModelConfig::validate() const {
  if (num_layers < 1 || num_heads < 1 || head_dim < 1 || ffn_dim < 1)
    throw ConfigError("model dimensions must be >= 1");
  if (max_context_words < 1 || max_sentence_len < 1)
    throw ConfigError("length caps must be >= 1");
  if (vocab_size <= Vocabulary::kNumSpecials)
    throw ConfigError("vocab_size must exceed the special-token count");
  if (num_styles != 2) throw ConfigError("exactly two styles are supported");
}

EncodedParallel encode_sample(const ParallelSample& s, const Vocabulary& vocab,
                              const ModelConfig& cfg) {
  EncodedParallel out;
  out.source = vocab.encode(s.source);
  if (int(out.source.size()) > cfg.max_sentence_len)
    out.source.resize(std::size_t(cfg.max_sentence_len));
  TokenSeq ref = s.reference;
  if (int(ref.size()) > cfg.max_sentence_len)
    ref.resize(std::size_t(cfg.max_sentence_len));
  out.reference_framed = vocab.encode(ref, /*add_bos_eos=*/true);

  ContextHole trimmed = truncate_context(s.context, cfg.max_context_words);
  for (const auto& sent : trimmed.before)
    for (const auto& tok : sent)
      out.context_before_flat.push_back(vocab.id_of(tok));
  for (const auto& sent : trimmed.after)
    for (const auto& tok : sent)
      out.context_after_flat.push_back(vocab.id_of(tok));
  out.context_flat = out.context_before_flat;
  out.context_flat.insert(out.context_flat.end(),
                          out.context_after_flat.begin(),
                          out.context_after_flat.end());
  out.source_style = s.source_style;
  out.target_style = s.target_style;
  return out;
}

EncodedNonParallel encode_sample(const NonParallelSample& s,
                                 const Vocabulary& vocab,
                                 const ModelConfig& cfg) {
  EncodedNonParallel out;
  TokenSeq sent = s.sentence;
  if (int(sent.size()) > cfg.max_sentence_len)
    sent.resize(std::size_t(cfg.max_sentence_len));
  out.sentence = vocab.encode(sent);
  out.sentence_framed = vocab.encode(sent, /*add_bos_eos=*/true);
  out.style = s.style;
  return out;
}

CastModel::CastModel(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const int d = cfg_.width();
  tok_emb_ = &params_.create("embed.tok", cfg_.vocab_size, d, rng);
  style_emb_ = &params_.create("embed.style", cfg_.num_styles, d, rng);
  null_ctx_ = &params_.create("embed.null_ctx", 1, d, rng);
  sent_enc_.init(params_, "enc_sent", cfg_.num_layers, cfg_.num_heads,
                 cfg_.head_dim, cfg_.ffn_dim, rng);
  ctx_enc_.init(params_, "enc_ctx", cfg_.num_layers, cfg_.num_heads,
                cfg_.head_dim, cfg_.ffn_dim, rng);
  fusion_.init(params_, "fusion", d, d, rng);
  decoder_.init(params_, "dec", cfg_.num_layers, cfg_.num_heads, cfg_.head_dim,
                cfg_.ffn_dim, rng);
  out_head_.init(params_, "out", d, cfg_.vocab_size, rng);
  // +2 slack: style slot plus BOS in decoder inputs
  const int max_pos =
      std::max(cfg_.max_sentence_len, cfg_.max_context_words) + 2;
  positions_ = nn::sinusoidal_positions(max_pos, d);
}

Var CastModel::embed_with_positions(Graph& g, const IdSeq& ids) const {
  for (int id : ids)
    if (id < 0 || id >= cfg_.vocab_size)
      throw std::out_of_range("token id out of vocabulary range");
  Var emb = rows(g.param(*tok_emb_), ids);
  return add_positions(g, emb);
}

double CastModel::embed_scale() const { return std::sqrt(double(cfg_.width())); }

Var CastModel::add_positions(Graph& g, Var features) const {
  const auto len = g.value(features).rows();
  if (len > positions_.rows())
    throw std::invalid_argument("sequence longer than position table");
  return add(scale(features, embed_scale()),
             g.constant(positions_.topRows(len)));
}

Var CastModel::encode_sentence(Graph& g, const IdSeq& x) const {
  if (x.empty()) throw std::invalid_argument("encode_sentence: empty input");
  if (int(x.size()) > cfg_.max_sentence_len)
    throw std::invalid_argument(
        "encode_sentence: input exceeds max_sentence_len; truncate first");
  return sent_enc_.apply(g, embed_with_positions(g, x));
}

Var CastModel::encode_sentence(Graph& g, Var features) const {
  const auto len = g.value(features).rows();
  if (len == 0) throw std::invalid_argument("encode_sentence: empty features");
  if (int(len) > cfg_.max_sentence_len)
    throw std::invalid_argument("encode_sentence: features exceed cap");
  return sent_enc_.apply(g, add_positions(g, features));
}

Var CastModel::encode_context(Graph& g, const IdSeq& c) const {
  if (c.empty()) return g.param(*null_ctx_);
  if (int(c.size()) > cfg_.max_context_words)
    throw std::invalid_argument(
        "encode_context: context exceeds max_context_words; truncate first");
  return ctx_enc_.apply(g, embed_with_positions(g, c));
}

Var CastModel::fuse(Graph& g, Var sent_feats, Var ctx_feats) const {
  const int d = cfg_.width();
  if (g.value(sent_feats).cols() != d || g.value(ctx_feats).cols() != d)
    throw std::invalid_argument("fuse: feature width mismatch");
  return fusion_.apply(g, concat_rows({sent_feats, ctx_feats}));
}

Var CastModel::memory_for(Graph& g, const IdSeq& x, const IdSeq& context_flat,
                          bool use_context) const {
  Var sent = encode_sentence(g, x);
  if (!use_context) return sent;
  return fuse(g, sent, encode_context(g, context_flat));
}

Var CastModel::memory_for(Graph& g, Var sent_features,
                          const IdSeq& context_flat, bool use_context) const {
  Var sent = encode_sentence(g, sent_features);
  if (!use_context) return sent;
  return fuse(g, sent, encode_context(g, context_flat));
}

Var CastModel::style_row(Graph& g, StyleLabel style) const {
  return rows(g.param(*style_emb_), IdSeq{int(style)});
}

Var CastModel::style_augmented_memory(Graph& g, Var memory,
                                      StyleLabel style) const {
  Var summary = add(mean_rows(memory), style_row(g, style));
  return concat_rows({memory, summary});
}

Var CastModel::decode_states(Graph& g, Var inputs, Var memory_aug) const {
  return decoder_.apply(g, inputs, memory_aug);
}

Var CastModel::output_logits(Graph& g, Var states) const {
  return out_head_.apply(g, states);
}

Var CastModel::sequence_log_prob(Graph& g, Var memory, StyleLabel style,
                                 const IdSeq& framed_target) const {
  if (framed_target.size() < 2 || framed_target.front() != Vocabulary::kBos ||
      framed_target.back() != Vocabulary::kEos)
    throw std::invalid_argument(
        "sequence_log_prob: target must be framed with BOS/EOS");
  const int m = int(framed_target.size());
  // inputs: [style, emb(BOS), emb(t1) ... emb(t_{n})]; row j >= 1 predicts
  // framed_target[j]
  IdSeq shifted(framed_target.begin(), framed_target.end() - 1);
  Var tok = rows(g.param(*tok_emb_), shifted);
  Var inputs = concat_rows({style_row(g, style), tok});
  inputs = add_positions(g, inputs);
  Var states = decode_states(g, inputs, style_augmented_memory(g, memory, style));
  Var logits = output_logits(g, states);
  Var lsm = log_softmax_rows(slice_rows(logits, 1, m - 1));
  IdSeq predicted(framed_target.begin() + 1, framed_target.end());
  return sum_all(pick_elems(lsm, predicted));
}

namespace {

int argmax_lowest_id(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = i;  // strict: ties keep the lowest id
  return best;
}

int sample_categorical(const Eigen::RowVectorXd& probs, Rng& rng) {
  const double r = rng.uniform01();
  double cum = 0.0;
  int last_positive = -1;
  for (int i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    last_positive = i;
    cum += probs(i);
    if (r < cum) return i;
  }
  return last_positive < 0 ? 0 : last_positive;
}

}  // namespace

GeneratedSequence CastModel::generate(Graph& g, Var memory, StyleLabel style,
                                      const GenOptions& opts, Rng* rng) const {
  if (opts.max_len < 1)
    throw std::invalid_argument("generate: max_len must be >= 1");
  if (opts.temperature <= 0.0)
    throw std::invalid_argument("generate: temperature must be positive");
  if (opts.mode == GenMode::kHardSample && rng == nullptr)
    throw std::invalid_argument("generate: hard sampling needs an rng");

  Var mem_aug = style_augmented_memory(g, memory, style);
  Var emb = g.param(*tok_emb_);
  GeneratedSequence out;

  nn::TransformerDecoder::StepState state = decoder_.init_step(g, mem_aug);
  auto feed = [&](Var row, int position) {
    Var with_pos =
        add(scale(row, embed_scale()), g.constant(positions_.row(position)));
    return decoder_.step(g, with_pos, state);
  };
  feed(style_row(g, style), 0);
  Var last = feed(rows(emb, IdSeq{Vocabulary::kBos}), 1);

  for (int step = 0; step < opts.max_len; ++step) {
    Var logits = output_logits(g, last);

    // PAD and BOS are never generated; EOS is barred at the first step so
    // the output is always non-empty.
    Mat mask = Mat::Zero(1, cfg_.vocab_size);
    mask(0, Vocabulary::kPad) = -1e30;
    mask(0, Vocabulary::kBos) = -1e30;
    if (step == 0) mask(0, Vocabulary::kEos) = -1e30;
    Var masked = add(logits, g.constant(mask));
    if (opts.temperature != 1.0)
      masked = scale(masked, 1.0 / opts.temperature);

    Var dist = softmax_rows(masked);
    const Eigen::RowVectorXd probs = g.value(dist).row(0);

    int chosen;
    switch (opts.mode) {
      case GenMode::kHardSample:
        chosen = sample_categorical(probs, *rng);
        break;
      case GenMode::kGreedy:
      case GenMode::kSoft:
        chosen = argmax_lowest_id(probs);
        break;
      default:
        throw std::logic_error("unknown generation mode");
    }
    const double lp = std::log(std::max(probs(chosen), 1e-300));
    if (chosen == Vocabulary::kEos) break;

    Var step_dist;
    if (opts.mode == GenMode::kSoft) {
      step_dist = dist;
    } else {
      Mat onehot = Mat::Zero(1, cfg_.vocab_size);
      onehot(0, chosen) = 1.0;
      step_dist = nn::straight_through(std::move(onehot), dist);
    }
    Var feature = matmul(step_dist, emb);

    out.token_ids.push_back(chosen);
    out.distributions.push_back(step_dist);
    out.features.push_back(feature);
    out.step_log_probs.push_back(lp);
    if (step + 1 < opts.max_len) last = feed(feature, step + 2);
  }
  return out;
}

GeneratedSequence CastModel::transfer(Graph& g, const IdSeq& x,
                                      const IdSeq& context_flat,
                                      StyleLabel target_style,
                                      const GenOptions& opts, Rng* rng,
                                      bool use_context) const {
  Var memory = memory_for(g, x, context_flat, use_context);
  return generate(g, memory, target_style, opts, rng);
}

}  // namespace cast
