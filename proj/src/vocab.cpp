#include "cast/vocab.hpp"

#include <algorithm>
#include <fstream>

namespace cast {

namespace {
const char* kSpecialNames[] = {"<pad>", "<unk>", "<bos>", "<eos>"};
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& corpora,
                             int min_frequency) {
  if (min_frequency < 1)
    throw std::invalid_argument("min_frequency must be >= 1");
  std::size_t total = 0;
  for (const auto& seq : corpora) total += seq.size();
  if (corpora.empty() || total == 0)
    throw std::invalid_argument("cannot build vocabulary from an empty corpus");

  std::map<Token, std::int64_t> counts;
  for (const auto& seq : corpora)
    for (const auto& t : seq) ++counts[t];

  std::vector<std::pair<Token, std::int64_t>> kept;
  for (const auto& [tok, c] : counts)
    if (c >= min_frequency) kept.emplace_back(tok, c);
  std::sort(kept.begin(), kept.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });

  Vocabulary v;
  v.min_frequency_ = min_frequency;
  for (const char* s : kSpecialNames) v.id_to_token_.emplace_back(s);
  for (const auto& [tok, c] : kept) v.id_to_token_.push_back(tok);
  v.index_tokens();
  return v;
}

void Vocabulary::index_tokens() {
  token_to_id_.clear();
  for (int i = 0; i < int(id_to_token_.size()); ++i)
    token_to_id_[id_to_token_[std::size_t(i)]] = i;
}

int Vocabulary::id_of(const Token& t) const {
  auto it = token_to_id_.find(t);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const Token& t) const {
  return token_to_id_.count(t) != 0;
}

const Token& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("token id " + std::to_string(id) +
                            " out of range for vocabulary of size " +
                            std::to_string(size()));
  return id_to_token_[std::size_t(id)];
}

IdSeq Vocabulary::encode(const TokenSeq& tokens, bool add_bos_eos) const {
  IdSeq out;
  out.reserve(tokens.size() + (add_bos_eos ? 2 : 0));
  if (add_bos_eos) out.push_back(kBos);
  for (const auto& t : tokens) out.push_back(id_of(t));
  if (add_bos_eos) out.push_back(kEos);
  return out;
}

TokenSeq Vocabulary::decode(const IdSeq& ids, bool display) const {
  TokenSeq out;
  out.reserve(ids.size());
  for (int id : ids) {
    const Token& t = token_of(id);
    if (display && (id == kPad || id == kBos || id == kEos)) continue;
    out.push_back(t);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file: " + path);
  for (const auto& t : id_to_token_) out << t << "\n";
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary file: " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) v.id_to_token_.push_back(line);
  if (v.id_to_token_.size() < kNumSpecials)
    throw DataError(path, v.id_to_token_.size(),
                    "vocabulary file is missing special tokens");
  for (int i = 0; i < kNumSpecials; ++i)
    if (v.id_to_token_[std::size_t(i)] != kSpecialNames[i])
      throw DataError(path, std::size_t(i) + 1,
                      "special token mismatch, expected " +
                          std::string(kSpecialNames[i]));
  v.index_tokens();
  if (v.token_to_id_.size() != v.id_to_token_.size())
    throw DataError("duplicate token in vocabulary file: " + path);
  return v;
}

}  // namespace cast
