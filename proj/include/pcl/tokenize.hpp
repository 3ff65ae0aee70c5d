#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <string>
#include <string_view>
#include <vector>

#include "pcl/corpus.hpp"
#include "pcl/errors.hpp"

namespace pcl {

class TokenizationError : public Error {
 public:
  using Error::Error;
};

// Subword tokenizer contract consumed by the pipeline.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<int> encode(std::string_view text) const = 0;
  virtual int cls_id() const = 0;
  virtual int sep_id() const = 0;
  virtual int pad_id() const = 0;
  virtual std::size_t vocab_size() const = 0;
};

// Deterministic whitespace tokenizer over a fixed vocabulary. Text is
// lower-cased and split on whitespace; unknown words map to <unk>. The
// special tokens occupy ids 0-3 in RoBERTa order: <s> <pad> </s> <unk>.
// Vocabulary files hold one token per line, in id order.
class VocabTokenizer final : public Tokenizer {
 public:
  static constexpr std::string_view kCls = "<s>";
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kSep = "</s>";
  static constexpr std::string_view kUnk = "<unk>";

  // `tokens` must begin with the four special tokens.
  explicit VocabTokenizer(std::vector<std::string> tokens);

  static VocabTokenizer load(const std::string& path);
  void save(const std::string& path) const;

  // Vocabulary of all words (and keywords) seen in `samples` at least
  // `min_count` times, sorted by descending frequency then lexically.
  static VocabTokenizer build(const std::vector<Sample>& samples, std::size_t min_count = 1);

  // Throws TokenizationError on invalid UTF-8.
  std::vector<int> encode(std::string_view text) const override;
  int cls_id() const override { return 0; }
  int pad_id() const override { return 1; }
  int sep_id() const override { return 2; }
  int unk_id() const { return 3; }
  std::size_t vocab_size() const override { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

bool is_valid_utf8(std::string_view s);

// [CLS] keyword(keyword_slot) [SEP] text(text_slot) [SEP]
struct TokenLayout {
  std::size_t keyword_slot = 3;
  std::size_t text_slot = 100;

  std::size_t seq_len() const { return keyword_slot + text_slot + 3; }

  // Keeps the 3-token keyword slot and gives the rest to text.
  static TokenLayout for_seq_len(std::size_t seq_len);
};

struct TokenizedExample {
  std::string par_id;
  std::vector<int> token_ids;
  std::vector<int> attention_mask;
  int binary_label = 0;
  CategoryLabels category_labels{};
};

// Keywords are encoded in their natural form ("poor-families" -> "poor
// families"). Slots are padded with the PAD id (mask 0) or truncated keeping
// the head.
TokenizedExample tokenize_sample(const Sample& sample, const Tokenizer& tok,
                                 const TokenLayout& layout = {});

// Order preserving. Failures are collected and reported together.
std::vector<TokenizedExample> batch_tokenize(const std::vector<Sample>& samples,
                                             const Tokenizer& tok,
                                             const TokenLayout& layout = {});

}  // namespace pcl
