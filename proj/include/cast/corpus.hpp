// Data model and ingestion: paragraphs, parallel/non-parallel samples,
// coherence pairs, JSONL reading/writing, and context truncation.

#ifndef CAST_CORPUS_HPP
#define CAST_CORPUS_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "cast/common.hpp"

namespace cast {

// A paragraph with the sentence of interest marked by index.
struct Paragraph {
  std::vector<TokenSeq> sentences;
  int target_index = 0;

  void validate() const;
};

// A paragraph with the target sentence removed; `before`/`after` are the
// sentences preceding and following the hole, in order.
struct ContextHole {
  std::vector<TokenSeq> before;
  std::vector<TokenSeq> after;

  bool empty() const { return before.empty() && after.empty(); }
  std::size_t word_count() const;
  TokenSeq flatten() const;
};

struct ParallelSample {
  TokenSeq source;
  TokenSeq reference;
  ContextHole context;
  StyleLabel source_style = StyleLabel::kStyleA;
  StyleLabel target_style = StyleLabel::kStyleB;

  void validate() const;
};

struct NonParallelSample {
  TokenSeq sentence;
  StyleLabel style = StyleLabel::kStyleA;

  void validate() const;
};

struct CoherencePair {
  ContextHole context;
  TokenSeq candidate;
  int label = 0;  // 1 iff candidate is the original sentence at the hole
};

// Removes the sentence at target_index, keeping the rest as before/after.
ContextHole make_hole(const Paragraph& p);

// JSONL ingestion. Each record is one line; invariant violations are
// reported with the offending line number.
std::vector<ParallelSample> load_parallel(const std::string& path,
                                          const StylePair& styles);
std::vector<NonParallelSample> load_nonparallel(const std::string& path,
                                                const StylePair& styles);
std::vector<Paragraph> load_paragraphs(const std::string& path);

void save_parallel(const std::string& path,
                   const std::vector<ParallelSample>& samples,
                   const StylePair& styles);
void save_nonparallel(const std::string& path,
                      const std::vector<NonParallelSample>& samples,
                      const StylePair& styles);
void save_paragraphs(const std::string& path,
                     const std::vector<Paragraph>& paragraphs);

// One positive pair per paragraph plus `negatives_per_positive` negatives
// whose candidate is a sentence drawn from a different paragraph.
std::vector<CoherencePair> make_coherence_pairs(
    const std::vector<Paragraph>& paragraphs, int negatives_per_positive,
    std::uint64_t seed);

// Keeps at most max_words context tokens, preferring tokens nearest the
// hole, alternating before/after starting on the before side. Order and
// sentence structure are preserved; emptied sentences are dropped.
ContextHole truncate_context(const ContextHole& context, int max_words);

}  // namespace cast

#endif  // CAST_CORPUS_HPP
