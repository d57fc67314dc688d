#include "cast/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cast {

using nlohmann::json;

void Paragraph::validate() const {
  if (sentences.size() < 2)
    throw std::invalid_argument(
        "paragraph needs the target sentence plus at least one context "
        "sentence");
  if (target_index < 0 || target_index >= int(sentences.size()))
    throw std::invalid_argument("target_index out of range");
  for (const auto& s : sentences)
    if (s.empty()) throw std::invalid_argument("empty sentence in paragraph");
}

std::size_t ContextHole::word_count() const {
  std::size_t n = 0;
  for (const auto& s : before) n += s.size();
  for (const auto& s : after) n += s.size();
  return n;
}

TokenSeq ContextHole::flatten() const {
  TokenSeq out;
  out.reserve(word_count());
  for (const auto& s : before) out.insert(out.end(), s.begin(), s.end());
  for (const auto& s : after) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void ParallelSample::validate() const {
  if (source_style == target_style)
    throw std::invalid_argument("source_style equals target_style");
  if (source.empty()) throw std::invalid_argument("empty source");
  if (reference.empty()) throw std::invalid_argument("empty reference");
  if (context.empty()) throw std::invalid_argument("empty context");
}

void NonParallelSample::validate() const {
  if (sentence.empty()) throw std::invalid_argument("empty sentence");
}

ContextHole make_hole(const Paragraph& p) {
  p.validate();
  ContextHole hole;
  for (int i = 0; i < int(p.sentences.size()); ++i) {
    if (i < p.target_index)
      hole.before.push_back(p.sentences[std::size_t(i)]);
    else if (i > p.target_index)
      hole.after.push_back(p.sentences[std::size_t(i)]);
  }
  return hole;
}

namespace {

TokenSeq tokens_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be an array of tokens");
  TokenSeq out;
  out.reserve(j.size());
  for (const auto& t : j) {
    if (!t.is_string()) throw std::invalid_argument(std::string(field) + " holds a non-string token");
    out.push_back(t.get<std::string>());
  }
  return out;
}

std::vector<TokenSeq> sentence_list_from_json(const json& j, const char* field) {
  if (!j.is_array()) throw std::invalid_argument(std::string(field) + " must be a list of sentences");
  std::vector<TokenSeq> out;
  out.reserve(j.size());
  for (const auto& s : j) out.push_back(tokens_from_json(s, field));
  return out;
}

json tokens_to_json(const TokenSeq& t) { return json(t); }

json sentences_to_json(const std::vector<TokenSeq>& ss) {
  json out = json::array();
  for (const auto& s : ss) out.push_back(tokens_to_json(s));
  return out;
}

const json& require(const json& rec, const char* field) {
  auto it = rec.find(field);
  if (it == rec.end())
    throw std::invalid_argument(std::string("missing field '") + field + "'");
  return *it;
}

StyleLabel style_from_json(const json& rec, const char* field,
                           const StylePair& styles) {
  const json& v = require(rec, field);
  if (!v.is_string())
    throw std::invalid_argument(std::string(field) + " must be a string");
  const std::string name = v.get<std::string>();
  if (!styles.knows(name))
    throw std::invalid_argument(std::string(field) + ": unknown style '" +
                                name + "'");
  return styles.label_of(name);
}

// Runs fn over every non-blank line, converting per-record exceptions into
// line-numbered DataErrors.
template <typename Fn>
void for_each_record(const std::string& path, Fn fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    try {
      fn(rec);
    } catch (const std::exception& e) {
      throw DataError(path, lineno, e.what());
    }
  }
}

}  // namespace

std::vector<ParallelSample> load_parallel(const std::string& path,
                                          const StylePair& styles) {
  std::vector<ParallelSample> out;
  for_each_record(path, [&](const json& rec) {
    ParallelSample s;
    s.source = tokens_from_json(require(rec, "source"), "source");
    s.reference = tokens_from_json(require(rec, "reference"), "reference");
    s.context.before =
        sentence_list_from_json(require(rec, "context_before"), "context_before");
    s.context.after =
        sentence_list_from_json(require(rec, "context_after"), "context_after");
    s.source_style = style_from_json(rec, "source_style", styles);
    s.target_style = style_from_json(rec, "target_style", styles);
    s.validate();
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<NonParallelSample> load_nonparallel(const std::string& path,
                                                const StylePair& styles) {
  std::vector<NonParallelSample> out;
  for_each_record(path, [&](const json& rec) {
    NonParallelSample s;
    s.sentence = tokens_from_json(require(rec, "sentence"), "sentence");
    s.style = style_from_json(rec, "style", styles);
    s.validate();
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<Paragraph> load_paragraphs(const std::string& path) {
  std::vector<Paragraph> out;
  for_each_record(path, [&](const json& rec) {
    Paragraph p;
    p.sentences = sentence_list_from_json(require(rec, "sentences"), "sentences");
    const json& ti = require(rec, "target_index");
    if (!ti.is_number_integer())
      throw std::invalid_argument("target_index must be an integer");
    p.target_index = ti.get<int>();
    p.validate();
    out.push_back(std::move(p));
  });
  return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  return out;
}

}  // namespace

void save_parallel(const std::string& path,
                   const std::vector<ParallelSample>& samples,
                   const StylePair& styles) {
  auto out = open_out(path);
  for (const auto& s : samples) {
    json rec;
    rec["source"] = tokens_to_json(s.source);
    rec["reference"] = tokens_to_json(s.reference);
    rec["context_before"] = sentences_to_json(s.context.before);
    rec["context_after"] = sentences_to_json(s.context.after);
    rec["source_style"] = styles.name_of(s.source_style);
    rec["target_style"] = styles.name_of(s.target_style);
    out << rec.dump() << "\n";
  }
}

void save_nonparallel(const std::string& path,
                      const std::vector<NonParallelSample>& samples,
                      const StylePair& styles) {
  auto out = open_out(path);
  for (const auto& s : samples) {
    json rec;
    rec["sentence"] = tokens_to_json(s.sentence);
    rec["style"] = styles.name_of(s.style);
    out << rec.dump() << "\n";
  }
}

void save_paragraphs(const std::string& path,
                     const std::vector<Paragraph>& paragraphs) {
  auto out = open_out(path);
  for (const auto& p : paragraphs) {
    json rec;
    rec["sentences"] = sentences_to_json(p.sentences);
    rec["target_index"] = p.target_index;
    out << rec.dump() << "\n";
  }
}

std::vector<CoherencePair> make_coherence_pairs(
    const std::vector<Paragraph>& paragraphs, int negatives_per_positive,
    std::uint64_t seed) {
  if (paragraphs.size() < 2)
    throw std::invalid_argument(
        "make_coherence_pairs needs at least 2 paragraphs");
  if (negatives_per_positive < 1)
    throw std::invalid_argument("negatives_per_positive must be >= 1");

  Rng rng(seed);
  std::vector<CoherencePair> out;
  out.reserve(paragraphs.size() * std::size_t(1 + negatives_per_positive));
  for (std::size_t i = 0; i < paragraphs.size(); ++i) {
    const Paragraph& p = paragraphs[i];
    p.validate();
    ContextHole hole = make_hole(p);

    CoherencePair pos;
    pos.context = hole;
    pos.candidate = p.sentences[std::size_t(p.target_index)];
    pos.label = 1;
    out.push_back(std::move(pos));

    for (int k = 0; k < negatives_per_positive; ++k) {
      // uniform over the other paragraphs, then uniform over its sentences
      std::size_t j = std::size_t(
          rng.uniform_int(0, std::int64_t(paragraphs.size()) - 2));
      if (j >= i) ++j;
      const Paragraph& q = paragraphs[j];
      const TokenSeq& cand = q.sentences[std::size_t(
          rng.uniform_int(0, std::int64_t(q.sentences.size()) - 1))];
      CoherencePair neg;
      neg.context = hole;
      neg.candidate = cand;
      neg.label = 0;
      out.push_back(std::move(neg));
    }
  }
  return out;
}

ContextHole truncate_context(const ContextHole& context, int max_words) {
  if (max_words < 1) throw std::invalid_argument("max_words must be >= 1");
  const std::size_t total = context.word_count();
  if (total <= std::size_t(max_words)) return context;

  // Tokens ranked by distance to the hole; at equal distance the before
  // side wins, which realizes the alternating pick order.
  std::size_t n_before = 0, n_after = 0;
  for (const auto& s : context.before) n_before += s.size();
  for (const auto& s : context.after) n_after += s.size();

  std::size_t keep_before = 0, keep_after = 0;
  std::size_t budget = std::size_t(max_words);
  std::size_t db = 1, da = 1;  // next candidate distance on each side
  while (budget > 0) {
    const bool before_ok = keep_before < n_before;
    const bool after_ok = keep_after < n_after;
    if (!before_ok && !after_ok) break;
    bool take_before;
    if (!after_ok)
      take_before = true;
    else if (!before_ok)
      take_before = false;
    else
      take_before = db <= da;
    if (take_before) {
      ++keep_before;
      ++db;
    } else {
      ++keep_after;
      ++da;
    }
    --budget;
  }

  ContextHole out;
  // keep the last keep_before tokens of `before`
  std::size_t drop = n_before - keep_before;
  for (const auto& s : context.before) {
    if (drop >= s.size()) {
      drop -= s.size();
      continue;
    }
    TokenSeq kept(s.begin() + std::ptrdiff_t(drop), s.end());
    drop = 0;
    if (!kept.empty()) out.before.push_back(std::move(kept));
  }
  // keep the first keep_after tokens of `after`
  std::size_t remain = keep_after;
  for (const auto& s : context.after) {
    if (remain == 0) break;
    std::size_t take = std::min(remain, s.size());
    TokenSeq kept(s.begin(), s.begin() + std::ptrdiff_t(take));
    remain -= take;
    out.after.push_back(std::move(kept));
  }
  return out;
}

}  // namespace cast
