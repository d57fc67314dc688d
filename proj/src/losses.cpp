#include "cast/losses.hpp"

#include <cmath>

namespace cast {

using nn::Graph;
using nn::Var;
using namespace nn;  // op library

void LossWeights::validate() const {
  for (double v : {lambda1, lambda2, lambda3, lambda4})
    if (!(v >= 0.0) || !std::isfinite(v))
      throw ConfigError("loss weights must be finite and >= 0");
}

namespace {

constexpr std::uint64_t kCohereSalt = 0x636f6865ULL;
constexpr std::uint64_t kBtransSalt = 0x62747261ULL;
constexpr std::uint64_t kStyleSalt = 0x7374796cULL;

int gen_max_len(const GenLossOptions& opts, const CastModel& m) {
  return opts.max_len > 0
             ? std::min(opts.max_len, m.config().max_sentence_len)
             : m.config().max_sentence_len;
}

Var batch_mean(Var total, std::size_t n) {
  return scale(total, 1.0 / double(n));
}

Var accumulate(Var total, Var term) {
  return total.valid() ? add(total, term) : term;
}

// L x V distribution matrix of a generated sequence
Var dist_matrix(const GeneratedSequence& gen) {
  if (gen.distributions.empty())
    throw std::logic_error("generated sequence is empty");
  return gen.distributions.size() == 1 ? gen.distributions[0]
                                       : concat_rows(gen.distributions);
}

Var feature_matrix(const GeneratedSequence& gen) {
  if (gen.features.empty())
    throw std::logic_error("generated sequence is empty");
  return gen.features.size() == 1 ? gen.features[0]
                                  : concat_rows(gen.features);
}

}  // namespace

Var contextual_s2s_loss(Graph& g, const CastModel& m,
                        const std::vector<EncodedParallel>& batch,
                        bool use_context) {
  if (batch.empty())
    throw std::invalid_argument("contextual_s2s_loss: empty batch");
  Var total{};
  for (const auto& s : batch) {
    Var memory = m.memory_for(g, s.source, s.context_flat, use_context);
    Var lp = m.sequence_log_prob(g, memory, s.target_style, s.reference_framed);
    total = accumulate(total, scale(lp, -1.0));
  }
  return batch_mean(total, batch.size());
}

Var coherence_loss(Graph& g, const CastModel& m, const CoherenceClassifier& clf,
                   const std::vector<EncodedParallel>& batch,
                   const GenLossOptions& opts, bool use_context) {
  if (batch.empty())
    throw std::invalid_argument("coherence_loss: empty batch");
  if (!clf.frozen())
    throw std::runtime_error(
        "coherence_loss: classifier must be pre-trained and frozen");
  Rng rng(splitmix64(opts.seed ^ kCohereSalt));
  GenOptions gen_opts{opts.mode, gen_max_len(opts, m), opts.temperature};
  Var total{};
  for (const auto& s : batch) {
    Var memory = m.memory_for(g, s.source, s.context_flat, use_context);
    GeneratedSequence gen =
        m.generate(g, memory, s.target_style, gen_opts, &rng);
    Var lp = clf.log_probs(g, s.context_before_flat, s.context_after_flat,
                           dist_matrix(gen));
    // -log p(s=1 | c, f(y~))
    total = accumulate(total, scale(pick_elems(lp, IdSeq{1}), -1.0));
  }
  return batch_mean(total, batch.size());
}

Var reconstruction_loss(Graph& g, const CastModel& m,
                        const std::vector<EncodedNonParallel>& batch,
                        bool use_context) {
  if (batch.empty())
    throw std::invalid_argument("reconstruction_loss: empty batch");
  Var total{};
  for (const auto& s : batch) {
    Var memory = m.memory_for(g, s.sentence, IdSeq{}, use_context);
    Var lp = m.sequence_log_prob(g, memory, s.style, s.sentence_framed);
    total = accumulate(total, scale(lp, -1.0));
  }
  return batch_mean(total, batch.size());
}

Var back_translation_loss(Graph& g, const CastModel& m,
                          const std::vector<EncodedNonParallel>& batch,
                          const GenLossOptions& opts, bool use_context) {
  if (batch.empty())
    throw std::invalid_argument("back_translation_loss: empty batch");
  Rng rng(splitmix64(opts.seed ^ kBtransSalt));
  GenMode first_hop = opts.mode == GenMode::kSoft
                          ? GenMode::kSoft
                          : (opts.btrans_first_hop_sample ? GenMode::kHardSample
                                                          : GenMode::kGreedy);
  GenOptions gen_opts{first_hop, gen_max_len(opts, m), opts.temperature};
  Var total{};
  for (const auto& s : batch) {
    const StyleLabel target = opposite(s.style);
    Var memory = m.memory_for(g, s.sentence, IdSeq{}, use_context);
    GeneratedSequence hop = m.generate(g, memory, target, gen_opts, &rng);
    Var feats = feature_matrix(hop);
    if (opts.btrans_stop_gradient) feats = stop_gradient(feats);
    Var memory_back = m.memory_for(g, feats, IdSeq{}, use_context);
    Var lp = m.sequence_log_prob(g, memory_back, s.style, s.sentence_framed);
    total = accumulate(total, scale(lp, -1.0));
  }
  return batch_mean(total, batch.size());
}

Var style_loss(Graph& g, const CastModel& m, const StyleClassifier& clf,
               const std::vector<EncodedNonParallel>& batch,
               const GenLossOptions& opts, bool use_context) {
  if (batch.empty()) throw std::invalid_argument("style_loss: empty batch");
  if (!clf.frozen())
    throw std::runtime_error(
        "style_loss: classifier must be pre-trained and frozen");
  Rng rng(splitmix64(opts.seed ^ kStyleSalt));
  GenOptions gen_opts{opts.mode, gen_max_len(opts, m), opts.temperature};
  Var total{};
  for (const auto& s : batch) {
    Var memory = m.memory_for(g, s.sentence, IdSeq{}, use_context);
    // self path: x^ = D(E_s(x), l), scored for the input style
    GeneratedSequence self_gen = m.generate(g, memory, s.style, gen_opts, &rng);
    Var lp_self = clf.log_probs(g, dist_matrix(self_gen));
    Var term = scale(pick_elems(lp_self, IdSeq{int(s.style)}), -1.0);
    // transfer path: x~ = D(E_s(x), l~), scored for the opposite style
    const StyleLabel target = opposite(s.style);
    GeneratedSequence cross_gen = m.generate(g, memory, target, gen_opts, &rng);
    Var lp_cross = clf.log_probs(g, dist_matrix(cross_gen));
    term = add(term, scale(pick_elems(lp_cross, IdSeq{int(target)}), -1.0));
    total = accumulate(total, term);
  }
  return batch_mean(total, batch.size());
}

FinalLoss final_loss(Graph& g, const CastModel& m,
                     const StyleClassifier* style_clf,
                     const CoherenceClassifier* coherence_clf,
                     const std::vector<EncodedParallel>& parallel_batch,
                     const std::vector<EncodedNonParallel>& nonparallel_batch,
                     const LossWeights& weights, const GenLossOptions& opts,
                     const AblationSwitches& switches) {
  weights.validate();
  if (parallel_batch.empty())
    throw std::invalid_argument("final_loss: empty parallel batch");
  if (switches.use_nonparallel && nonparallel_batch.empty())
    throw std::invalid_argument("final_loss: empty non-parallel batch");

  const bool use_ctx = switches.use_context_encoder;
  FinalLoss out;

  Var total = contextual_s2s_loss(g, m, parallel_batch, use_ctx);
  out.values.c_s2s = scalar_value(total);

  if (switches.use_coherence_loss && weights.lambda1 > 0.0) {
    if (coherence_clf == nullptr)
      throw std::invalid_argument(
          "final_loss: coherence loss enabled but classifier missing");
    Var coh =
        coherence_loss(g, m, *coherence_clf, parallel_batch, opts, use_ctx);
    out.values.cohere = scalar_value(coh);
    total = add(total, scale(coh, weights.lambda1));
  }

  if (switches.use_nonparallel) {
    if (weights.lambda2 > 0.0) {
      Var recon = reconstruction_loss(g, m, nonparallel_batch, use_ctx);
      out.values.recon = scalar_value(recon);
      total = add(total, scale(recon, weights.lambda2));
    }
    if (weights.lambda3 > 0.0) {
      Var btrans =
          back_translation_loss(g, m, nonparallel_batch, opts, use_ctx);
      out.values.btrans = scalar_value(btrans);
      total = add(total, scale(btrans, weights.lambda3));
    }
    if (weights.lambda4 > 0.0) {
      if (style_clf == nullptr)
        throw std::invalid_argument(
            "final_loss: style loss enabled but classifier missing");
      Var style = style_loss(g, m, *style_clf, nonparallel_batch, opts, use_ctx);
      out.values.style = scalar_value(style);
      total = add(total, scale(style, weights.lambda4));
    }
  }

  out.total = total;
  out.values.final = scalar_value(total);
  return out;
}

}  // namespace cast
