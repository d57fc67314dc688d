// The CAST network: sentence encoder, context encoder, linear fusion, and a
// style-conditioned decoder with differentiable sequence generation.

#ifndef CAST_MODEL_HPP
#define CAST_MODEL_HPP

#include "cast/corpus.hpp"
#include "cast/layers.hpp"
#include "cast/vocab.hpp"

namespace cast {

struct ModelConfig {
  int num_layers = 1;
  int num_heads = 4;
  int head_dim = 64;  // model width = num_heads * head_dim
  int ffn_dim = 1024;
  int max_context_words = 50;
  int max_sentence_len = 32;
  int vocab_size = 0;
  int num_styles = 2;

  int width() const { return num_heads * head_dim; }
  void validate() const;
};

enum class GenMode { kGreedy, kHardSample, kSoft };

struct GenOptions {
  GenMode mode = GenMode::kGreedy;
  int max_len = 32;
  double temperature = 1.0;
};

// One generated sequence, on-tape. `distributions` hold the per-step
// probabilities over the vocabulary (the differentiable surrogate);
// `features` are those distributions embedded through the model's token
// table. In hard/greedy modes the feature forward value is exactly one
// embedding row; gradients flow through the softmax mixture.
struct GeneratedSequence {
  IdSeq token_ids;
  std::vector<nn::Var> distributions;  // each 1 x V
  std::vector<nn::Var> features;       // each 1 x width
  std::vector<double> step_log_probs;

  std::size_t length() const { return token_ids.size(); }
};

// Parallel/non-parallel samples mapped into id space with caps applied.
struct EncodedParallel {
  IdSeq source;
  IdSeq reference_framed;  // BOS ... EOS
  IdSeq context_flat;      // truncated + flattened, may be empty
  IdSeq context_before_flat;
  IdSeq context_after_flat;
  StyleLabel source_style = StyleLabel::kStyleA;
  StyleLabel target_style = StyleLabel::kStyleB;
};

struct EncodedNonParallel {
  IdSeq sentence;
  IdSeq sentence_framed;  // BOS ... EOS
  StyleLabel style = StyleLabel::kStyleA;
};

EncodedParallel encode_sample(const ParallelSample& s, const Vocabulary& vocab,
                              const ModelConfig& cfg);
EncodedNonParallel encode_sample(const NonParallelSample& s,
                                 const Vocabulary& vocab,
                                 const ModelConfig& cfg);

class CastModel {
 public:
  CastModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  nn::ParameterStore& params() { return params_; }
  const nn::ParameterStore& params() const { return params_; }

  // E_s over token ids; one feature row per input position.
  nn::Var encode_sentence(nn::Graph& g, const IdSeq& x) const;
  // E_s over continuous features already in embedding space.
  nn::Var encode_sentence(nn::Graph& g, nn::Var features) const;
  // E_c; empty context yields the learned null-context row.
  nn::Var encode_context(nn::Graph& g, const IdSeq& c) const;
  // Position-wise linear projection of [sent ; ctx].
  nn::Var fuse(nn::Graph& g, nn::Var sent_feats, nn::Var ctx_feats) const;

  // Composition used by every loss: use_context=false is the plain
  // sentence-only path (no fusion, no context row).
  nn::Var memory_for(nn::Graph& g, const IdSeq& x, const IdSeq& context_flat,
                     bool use_context) const;
  nn::Var memory_for(nn::Graph& g, nn::Var sent_features,
                     const IdSeq& context_flat, bool use_context) const;

  //

  // Teacher-forced log p(target | memory, style); target framed BOS..EOS.
  nn::Var sequence_log_prob(nn::Graph& g, nn::Var memory, StyleLabel style,
                            const IdSeq& framed_target) const;

  // Autoregressive decoding until EOS or max_len. rng is only consulted in
  // hard-sample mode.
  GeneratedSequence generate(nn::Graph& g, nn::Var memory, StyleLabel style,
                             const GenOptions& opts, Rng* rng) const;

  // encode -> fuse -> generate; empty context uses the null-context path.
  GeneratedSequence transfer(nn::Graph& g, const IdSeq& x,
                             const IdSeq& context_flat, StyleLabel target_style,
                             const GenOptions& opts, Rng* rng,
                             bool use_context = true) const;

  nn::Var token_embedding_var(nn::Graph& g) const {
    return g.param(*tok_emb_);
  }

 private:
  nn::Var embed_with_positions(nn::Graph& g, const IdSeq& ids) const;
  double embed_scale() const;
  nn::Var add_positions(nn::Graph& g, nn::Var features) const;
  // memory plus one extra row: pooled summary + style embedding
  nn::Var style_augmented_memory(nn::Graph& g, nn::Var memory,
                                 StyleLabel style) const;
  nn::Var style_row(nn::Graph& g, StyleLabel style) const;
  nn::Var decode_states(nn::Graph& g, nn::Var inputs, nn::Var memory_aug) const;
  nn::Var output_logits(nn::Graph& g, nn::Var states) const;

  ModelConfig cfg_;
  nn::ParameterStore params_;
  nn::Parameter* tok_emb_ = nullptr;    // V x width
  nn::Parameter* style_emb_ = nullptr;  // num_styles x width
  nn::Parameter* null_ctx_ = nullptr;   // 1 x width
  nn::TransformerEncoder sent_enc_;
  nn::TransformerEncoder ctx_enc_;
  nn::LinearLayer fusion_;
  nn::TransformerDecoder decoder_;
  nn::LinearLayer out_head_;
  nn::Mat positions_;  // precomputed sinusoidal table
};

}  // namespace cast

#endif  // CAST_MODEL_HPP
