// Training objectives: contextual seq2seq, coherence, self-reconstruction,
// back-translation, style classification, and their weighted combination.
// All functions build onto a caller-provided graph and return on-tape
// scalars, so one backward pass covers a whole hybrid step.

#ifndef CAST_LOSSES_HPP
#define CAST_LOSSES_HPP

#include "cast/classifiers.hpp"
#include "cast/model.hpp"

namespace cast {

struct LossWeights {
  double lambda1 = 1.0;  // coherence
  double lambda2 = 1.0;  // reconstruction
  double lambda3 = 1.0;  // back-translation
  double lambda4 = 1.0;  // style classification

  void validate() const;
};

struct LossBreakdown {
  double c_s2s = 0.0;
  double cohere = 0.0;
  double recon = 0.0;
  double btrans = 0.0;
  double style = 0.0;
  double final = 0.0;

  double weighted_sum(const LossWeights& w) const {
    return c_s2s + w.lambda1 * cohere + w.lambda2 * recon +
           w.lambda3 * btrans + w.lambda4 * style;
  }
};

// Generation settings for the losses that decode sequences. `seed` makes
// repeated evaluations with identical inputs reproduce exactly.
struct GenLossOptions {
  GenMode mode = GenMode::kHardSample;
  double temperature = 1.0;
  int max_len = 0;  // 0: use the model's max_sentence_len
  std::uint64_t seed = 0;
  bool btrans_first_hop_sample = true;   // sample vs greedy first hop
  bool btrans_stop_gradient = false;     // cut the straight-through path
};

struct AblationSwitches {
  bool use_context_encoder = true;
  bool use_coherence_loss = true;
  bool use_nonparallel = true;
};

// Eq.-(3)-style teacher-forced NLL; with use_context=false this is the
// plain sentence-only seq2seq objective.
nn::Var contextual_s2s_loss(nn::Graph& g, const CastModel& m,
                            const std::vector<EncodedParallel>& batch,
                            bool use_context = true);

nn::Var coherence_loss(nn::Graph& g, const CastModel& m,
                       const CoherenceClassifier& clf,
                       const std::vector<EncodedParallel>& batch,
                       const GenLossOptions& opts, bool use_context = true);

nn::Var reconstruction_loss(nn::Graph& g, const CastModel& m,
                            const std::vector<EncodedNonParallel>& batch,
                            bool use_context = true);

nn::Var back_translation_loss(nn::Graph& g, const CastModel& m,
                              const std::vector<EncodedNonParallel>& batch,
                              const GenLossOptions& opts,
                              bool use_context = true);

nn::Var style_loss(nn::Graph& g, const CastModel& m, const StyleClassifier& clf,
                   const std::vector<EncodedNonParallel>& batch,
                   const GenLossOptions& opts, bool use_context = true);

struct FinalLoss {
  nn::Var total;          // on-tape weighted sum
  LossBreakdown values;   // extracted component values
};

// Weighted combination per the final objective. Components that are
// switched off or weighted zero are skipped and reported as zero.
FinalLoss final_loss(nn::Graph& g, const CastModel& m,
                     const StyleClassifier* style_clf,
                     const CoherenceClassifier* coherence_clf,
                     const std::vector<EncodedParallel>& parallel_batch,
                     const std::vector<EncodedNonParallel>& nonparallel_batch,
                     const LossWeights& weights, const GenLossOptions& opts,
                     const AblationSwitches& switches = {});

}  // namespace cast

#endif  // CAST_LOSSES_HPP
