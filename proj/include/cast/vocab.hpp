// Token<->id mapping with frequency thresholding and fixed special tokens.

#ifndef CAST_VOCAB_HPP
#define CAST_VOCAB_HPP

#include <map>
#include <string>
#include <vector>

#include "cast/common.hpp"

namespace cast {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;

  // Tokens with corpus count < min_frequency map to UNK. Kept tokens get
  // ids by descending count, ties broken lexicographically.
  static Vocabulary build(const std::vector<TokenSeq>& corpora,
                          int min_frequency);

  int size() const { return int(id_to_token_.size()); }
  int kept_count() const { return size() - kNumSpecials; }
  int min_frequency() const { return min_frequency_; }

  int id_of(const Token& t) const;  // UNK for out-of-vocab
  bool contains(const Token& t) const;
  const Token& token_of(int id) const;  // throws std::out_of_range

  IdSeq encode(const TokenSeq& tokens, bool add_bos_eos = false) const;
  // display=true strips PAD/BOS/EOS and renders UNK as its sentinel
  TokenSeq decode(const IdSeq& ids, bool display = false) const;

  // one token per line, line number = id
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_;
  }

 private:
  Vocabulary() = default;
  void index_tokens();

  std::vector<Token> id_to_token_;
  std::map<Token, int> token_to_id_;
  int min_frequency_ = 1;
};

}  // namespace cast

#endif  // CAST_VOCAB_HPP
