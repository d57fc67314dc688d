#include "cast/synthetic.hpp"

#include <algorithm>

namespace cast {

using nlohmann::json;

namespace {

const std::vector<std::string> kDefaultAOpeners = {
    "yo", "hey", "sup", "nah", "huh", "wow",
    "meh", "lol", "psst", "whoa", "yikes", "uhh"};
const std::vector<std::string> kDefaultBOpeners = {
    "indeed",       "notably",      "formally",     "therefore",
    "moreover",     "however",      "accordingly",  "subsequently",
    "specifically", "evidently",    "certainly",    "consequently"};
const std::vector<std::string> kDefaultATags = {
    "man", "dude", "bro", "innit", "tho", "yeah",
    "kinda", "sorta", "haha", "okay", "rite", "whatev"};
const std::vector<std::string> kDefaultBLeads = {
    "hereby", "kindly", "politely", "duly", "officially", "cordially",
    "respectfully", "earnestly", "sincerely", "graciously", "humbly", "gravely"};

const std::vector<std::string> kGlue = {"the", "and", "near", "with", "about"};
const std::vector<std::string> kConnectives = {"and", "near", "with", "about"};

const std::vector<std::string> kTopicStems = {
    "bel", "cor", "dag", "fen", "gol", "hum", "jil", "kep", "lom", "mun",
    "nir", "pos", "qur", "rag", "sel", "tov", "ulm", "vek", "wor", "xan",
    "yel", "zam"};
const std::vector<std::string> kTopicSuffixes = {
    "a", "en", "ira", "ost", "ume", "yx", "ar", "il", "ox", "une", "eta", "orn"};

std::string topic_word(int topic, int j) {
  if (topic < int(kTopicStems.size()) && j < int(kTopicSuffixes.size()))
    return kTopicStems[std::size_t(topic)] + kTopicSuffixes[std::size_t(j)];
  return "top" + std::to_string(topic) + "w" + std::to_string(j);
}

void check_disjoint(const std::vector<const std::vector<std::string>*>& sets,
                    const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    std::set<std::string> seen(sets[i]->begin(), sets[i]->end());
    if (seen.size() != sets[i]->size())
      throw ConfigError("synthetic lexicon '" + names[i] +
                        "' contains duplicates");
    for (std::size_t j = i + 1; j < sets.size(); ++j)
      for (const auto& w : *sets[j])
        if (seen.count(w))
          throw ConfigError("synthetic lexicons '" + names[i] + "' and '" +
                            names[j] + "' overlap on token '" + w + "'");
  }
}

}  // namespace

void SyntheticConfig::fill_defaults() {
  if (style_a_openers.empty()) style_a_openers = kDefaultAOpeners;
  if (style_b_openers.empty()) style_b_openers = kDefaultBOpeners;
  if (style_a_tags.empty()) style_a_tags = kDefaultATags;
  if (style_b_leads.empty()) style_b_leads = kDefaultBLeads;
}

void SyntheticConfig::validate() const {
  if (num_topics < 2) throw ConfigError("synthetic: need at least 2 topics");
  if (words_per_topic < 1)
    throw ConfigError("synthetic: words_per_topic must be >= 1");
  if (num_marker_pairs < 1)
    throw ConfigError("synthetic: num_marker_pairs must be >= 1");
  if (style_a_openers.empty() || style_b_openers.empty() ||
      style_a_tags.empty() || style_b_leads.empty())
    throw ConfigError("synthetic: empty style-marker lexicon");
  if (int(style_a_openers.size()) < num_marker_pairs ||
      int(style_b_openers.size()) < num_marker_pairs ||
      int(style_a_tags.size()) < num_marker_pairs ||
      int(style_b_leads.size()) < num_marker_pairs)
    throw ConfigError("synthetic: lexicons smaller than num_marker_pairs");
  if (min_content_words < 1 || max_content_words < min_content_words)
    throw ConfigError("synthetic: bad content word range");
  if (min_paragraph_sentences < 2 ||
      max_paragraph_sentences < min_paragraph_sentences)
    throw ConfigError("synthetic: paragraphs need >= 2 sentences");

  std::vector<std::string> topics;
  for (int k = 0; k < num_topics; ++k)
    for (int j = 0; j < words_per_topic; ++j)
      topics.push_back(topic_word(k, j));
  check_disjoint(
      {&style_a_openers, &style_b_openers, &style_a_tags, &style_b_leads,
       &topics, &kGlue},
      {"style_a_openers", "style_b_openers", "style_a_tags", "style_b_leads",
       "topic_words", "glue_words"});
}

StyleOracle::StyleOracle(const std::vector<std::string>& a_openers,
                         const std::vector<std::string>& b_openers,
                         const std::vector<std::string>& a_tags,
                         const std::vector<std::string>& b_leads) {
  if (a_openers.size() != b_openers.size() || a_tags.size() != b_leads.size())
    throw std::invalid_argument("oracle: paired lexicons must match in size");
  for (std::size_t i = 0; i < a_openers.size(); ++i) {
    opener_a_to_b_[a_openers[i]] = b_openers[i];
    opener_b_to_a_[b_openers[i]] = a_openers[i];
  }
  for (std::size_t i = 0; i < a_tags.size(); ++i) {
    tag_a_to_lead_b_[a_tags[i]] = b_leads[i];
    lead_b_to_tag_a_[b_leads[i]] = a_tags[i];
  }
  a_markers_.insert(a_openers.begin(), a_openers.end());
  a_markers_.insert(a_tags.begin(), a_tags.end());
  b_markers_.insert(b_openers.begin(), b_openers.end());
  b_markers_.insert(b_leads.begin(), b_leads.end());
}

StyleLabel StyleOracle::style_of(const TokenSeq& sentence) const {
  if (sentence.empty())
    throw std::invalid_argument("oracle: empty sentence");
  if (opener_a_to_b_.count(sentence.front())) return StyleLabel::kStyleA;
  if (opener_b_to_a_.count(sentence.front())) return StyleLabel::kStyleB;
  // fall back to marker counting
  int a = 0, b = 0;
  for (const auto& t : sentence) {
    a += a_markers_.count(t) ? 1 : 0;
    b += b_markers_.count(t) ? 1 : 0;
  }
  if (a == b)
    throw std::invalid_argument("oracle: cannot determine sentence style");
  return a > b ? StyleLabel::kStyleA : StyleLabel::kStyleB;
}

TokenSeq StyleOracle::apply(const TokenSeq& sentence) const {
  const StyleLabel from = style_of(sentence);
  TokenSeq out;
  if (from == StyleLabel::kStyleA) {
    // [a_opener, content..., a_tag] -> [b_opener, b_lead, content...]
    if (sentence.size() < 3)
      throw std::invalid_argument("oracle: style-A sentence too short");
    auto opener = opener_a_to_b_.find(sentence.front());
    auto tag = tag_a_to_lead_b_.find(sentence.back());
    if (opener == opener_a_to_b_.end() || tag == tag_a_to_lead_b_.end())
      throw std::invalid_argument("oracle: malformed style-A sentence");
    out.push_back(opener->second);
    out.push_back(tag->second);
    out.insert(out.end(), sentence.begin() + 1, sentence.end() - 1);
  } else {
    // [b_opener, b_lead, content...] -> [a_opener, content..., a_tag]
    if (sentence.size() < 3)
      throw std::invalid_argument("oracle: style-B sentence too short");
    auto opener = opener_b_to_a_.find(sentence.front());
    auto lead = lead_b_to_tag_a_.find(sentence[1]);
    if (opener == opener_b_to_a_.end() || lead == lead_b_to_tag_a_.end())
      throw std::invalid_argument("oracle: malformed style-B sentence");
    out.push_back(opener->second);
    out.insert(out.end(), sentence.begin() + 2, sentence.end());
    out.push_back(lead->second);
  }
  return out;
}

json StyleOracle::to_json() const {
  json j;
  j["opener_a_to_b"] = opener_a_to_b_;
  j["tag_a_to_lead_b"] = tag_a_to_lead_b_;
  return j;
}

StyleOracle StyleOracle::from_json(const json& j) {
  std::vector<std::string> ao, bo, at, bl;
  for (const auto& [k, v] : j.at("opener_a_to_b").items()) {
    ao.push_back(k);
    bo.push_back(v.get<std::string>());
  }
  for (const auto& [k, v] : j.at("tag_a_to_lead_b").items()) {
    at.push_back(k);
    bl.push_back(v.get<std::string>());
  }
  return StyleOracle(ao, bo, at, bl);
}

namespace {

struct Generator {
  const SyntheticConfig& cfg;
  const StyleOracle& oracle;
  std::vector<std::vector<std::string>> topics;

  TokenSeq content(int topic, Rng& rng) const {
    const int words =
        int(rng.uniform_int(cfg.min_content_words, cfg.max_content_words));
    TokenSeq out{"the", rng.pick(topics[std::size_t(topic)])};
    for (int i = 1; i < words; ++i) {
      out.push_back(rng.pick(kConnectives));
      out.push_back(rng.pick(topics[std::size_t(topic)]));
    }
    return out;
  }

  TokenSeq sentence(int topic, StyleLabel style, Rng& rng) const {
    const int m = int(rng.uniform_int(0, cfg.num_marker_pairs - 1));
    const int t = int(rng.uniform_int(0, cfg.num_marker_pairs - 1));
    TokenSeq body = content(topic, rng);
    TokenSeq out;
    if (style == StyleLabel::kStyleA) {
      out.push_back(cfg.style_a_openers[std::size_t(m)]);
      out.insert(out.end(), body.begin(), body.end());
      out.push_back(cfg.style_a_tags[std::size_t(t)]);
    } else {
      out.push_back(cfg.style_b_openers[std::size_t(m)]);
      out.push_back(cfg.style_b_leads[std::size_t(t)]);
      out.insert(out.end(), body.begin(), body.end());
    }
    return out;
  }

  Paragraph paragraph(int topic, Rng& rng) const {
    Paragraph p;
    const int n = int(rng.uniform_int(cfg.min_paragraph_sentences,
                                      cfg.max_paragraph_sentences));
    for (int i = 0; i < n; ++i) {
      const StyleLabel style =
          rng.bernoulli(0.5) ? StyleLabel::kStyleA : StyleLabel::kStyleB;
      p.sentences.push_back(sentence(topic, style, rng));
    }
    p.target_index = int(rng.uniform_int(0, n - 1));
    return p;
  }

  std::vector<ParallelSample> parallel_split(int count, Rng& rng) const {
    std::vector<ParallelSample> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
      const int topic = int(rng.uniform_int(0, cfg.num_topics - 1));
      const StyleLabel source_style =
          i % 2 == 0 ? StyleLabel::kStyleA : StyleLabel::kStyleB;
      Paragraph p = paragraph(topic, rng);
      TokenSeq src = sentence(topic, source_style, rng);
      p.sentences[std::size_t(p.target_index)] = src;

      ParallelSample s;
      s.source = src;
      s.reference = oracle.apply(src);
      s.context = make_hole(p);
      s.source_style = source_style;
      s.target_style = opposite(source_style);
      s.validate();
      out.push_back(std::move(s));
    }
    return out;
  }

  std::vector<NonParallelSample> nonparallel_split(int count, Rng& rng) const {
    std::vector<NonParallelSample> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
      const int topic = int(rng.uniform_int(0, cfg.num_topics - 1));
      NonParallelSample s;
      s.style = i % 2 == 0 ? StyleLabel::kStyleA : StyleLabel::kStyleB;
      s.sentence = sentence(topic, s.style, rng);
      out.push_back(std::move(s));
    }
    return out;
  }
};

}  // namespace

SyntheticBenchmark generate_synthetic_benchmark(const SyntheticConfig& config,
                                                std::uint64_t seed) {
  SyntheticConfig cfg = config;
  cfg.fill_defaults();
  cfg.validate();

  SyntheticBenchmark bench;
  bench.styles = cfg.styles;
  bench.oracle = StyleOracle(
      {cfg.style_a_openers.begin(), cfg.style_a_openers.begin() + cfg.num_marker_pairs},
      {cfg.style_b_openers.begin(), cfg.style_b_openers.begin() + cfg.num_marker_pairs},
      {cfg.style_a_tags.begin(), cfg.style_a_tags.begin() + cfg.num_marker_pairs},
      {cfg.style_b_leads.begin(), cfg.style_b_leads.begin() + cfg.num_marker_pairs});
  bench.glue_words = kGlue;
  for (int k = 0; k < cfg.num_topics; ++k) {
    std::vector<std::string> words;
    for (int j = 0; j < cfg.words_per_topic; ++j)
      words.push_back(topic_word(k, j));
    bench.topic_lexicons.push_back(std::move(words));
  }

  Generator gen{cfg, bench.oracle, bench.topic_lexicons};
  Rng root(seed);
  Rng r_train = root.child(101), r_dev = root.child(102),
      r_test = root.child(103), r_np = root.child(104),
      r_style = root.child(105), r_coh = root.child(106);

  bench.train = gen.parallel_split(cfg.parallel_train, r_train);
  bench.dev = gen.parallel_split(cfg.parallel_dev, r_dev);
  bench.test = gen.parallel_split(cfg.parallel_test, r_test);
  bench.nonparallel_train = gen.nonparallel_split(cfg.nonparallel_train, r_np);
  bench.style_classifier_pool =
      gen.nonparallel_split(cfg.style_classifier_pool, r_style);
  for (int i = 0; i < cfg.coherence_paragraphs; ++i) {
    const int topic = int(r_coh.uniform_int(0, cfg.num_topics - 1));
    bench.coherence_paragraphs.push_back(gen.paragraph(topic, r_coh));
  }
  return bench;
}

}  // namespace cast
