// Synthetic oracle benchmark. Styles are defined by disjoint marker
// lexicons and a deterministic rule-based rewrite, and every sentence in a
// paragraph draws its content words from one topic, so style accuracy,
// BLEU, and coherence all have known optima.

#ifndef CAST_SYNTHETIC_HPP
#define CAST_SYNTHETIC_HPP

#include <map>
#include <set>

#include <json.hpp>

#include "cast/corpus.hpp"

namespace cast {

struct SyntheticConfig {
  int num_topics = 12;
  int words_per_topic = 6;
  int num_marker_pairs = 10;

  // marker lexicons, paired by index; defaults provided
  std::vector<std::string> style_a_openers;
  std::vector<std::string> style_b_openers;
  std::vector<std::string> style_a_tags;
  std::vector<std::string> style_b_leads;

  int min_content_words = 2;
  int max_content_words = 4;
  int min_paragraph_sentences = 3;
  int max_paragraph_sentences = 5;

  int parallel_train = 400;
  int parallel_dev = 50;
  int parallel_test = 100;
  int nonparallel_train = 1200;
  int style_classifier_pool = 800;
  int coherence_paragraphs = 400;

  StylePair styles{"informal", "formal"};

  // fills empty lexicon slots with the built-in defaults
  void fill_defaults();
  void validate() const;
};

// Deterministic restyle: opener substitution plus a template move. Style A
// sentences read  [opener, content..., tag]  and style B sentences read
// [opener, lead, content...]; the rewrite swaps the opener with its partner
// and moves the tag/lead slot across the template.
class StyleOracle {
 public:
  StyleOracle() = default;
  StyleOracle(const std::vector<std::string>& a_openers,
              const std::vector<std::string>& b_openers,
              const std::vector<std::string>& a_tags,
              const std::vector<std::string>& b_leads);

  // rewrites into the opposite style; throws on malformed sentences
  TokenSeq apply(const TokenSeq& sentence) const;
  StyleLabel style_of(const TokenSeq& sentence) const;
  const std::set<std::string>& markers(StyleLabel style) const {
    return style == StyleLabel::kStyleA ? a_markers_ : b_markers_;
  }

  nlohmann::json to_json() const;
  static StyleOracle from_json(const nlohmann::json& j);

 private:
  std::map<std::string, std::string> opener_a_to_b_, opener_b_to_a_;
  std::map<std::string, std::string> tag_a_to_lead_b_, lead_b_to_tag_a_;
  std::set<std::string> a_markers_, b_markers_;
};

struct SyntheticBenchmark {
  std::vector<ParallelSample> train, dev, test;
  std::vector<NonParallelSample> nonparallel_train;
  std::vector<NonParallelSample> style_classifier_pool;
  std::vector<Paragraph> coherence_paragraphs;
  StyleOracle oracle;
  StylePair styles;
  std::vector<std::vector<std::string>> topic_lexicons;
  std::vector<std::string> glue_words;
};

SyntheticBenchmark generate_synthetic_benchmark(const SyntheticConfig& config,
                                                std::uint64_t seed);

}  // namespace cast

#endif  // CAST_SYNTHETIC_HPP
