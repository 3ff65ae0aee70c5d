#include "pcl/tokenize.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <unordered_map>

namespace pcl {

namespace {

std::vector<std::string> lower_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::string keyword_text(std::string_view keyword) {
  std::string k(keyword);
  std::replace(k.begin(), k.end(), '-', ' ');
  return k;
}

void fill_slot(std::vector<int>& ids, std::vector<int>& mask, const std::vector<int>& src,
               std::size_t slot, int pad) {
  const std::size_t n = std::min(slot, src.size());
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(src[i]);
    mask.push_back(1);
  }
  for (std::size_t i = n; i < slot; ++i) {
    ids.push_back(pad);
    mask.push_back(0);
  }
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      extra = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      extra = 3;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::uint32_t min_cp[] = {0, 0x80, 0x800, 0x10000};
    if (cp < min_cp[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
    i += extra + 1;
  }
  return true;
}

VocabTokenizer::VocabTokenizer(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const std::string_view specials[] = {kCls, kPad, kSep, kUnk};
  if (tokens_.size() < 4) throw TokenizationError("vocabulary lacks special tokens");
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens_[i] != specials[i]) {
      throw TokenizationError("vocabulary id " + std::to_string(i) + " must be " +
                              std::string(specials[i]));
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw TokenizationError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

VocabTokenizer VocabTokenizer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) tokens.push_back(line);
  }
  return VocabTokenizer(std::move(tokens));
}

void VocabTokenizer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path);
  for (const auto& t : tokens_) out << t << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

VocabTokenizer VocabTokenizer::build(const std::vector<Sample>& samples, std::size_t min_count) {
  std::map<std::string, std::size_t> freq;
  for (const auto& s : samples) {
    for (auto& w : lower_words(s.text)) ++freq[w];
    for (auto& w : lower_words(keyword_text(s.keyword))) ++freq[w];
  }
  std::vector<std::pair<std::string, std::size_t>> entries(freq.begin(), freq.end());
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens = {std::string(kCls), std::string(kPad), std::string(kSep),
                                     std::string(kUnk)};
  for (auto& [w, n] : entries) {
    if (n >= min_count && w != kCls && w != kPad && w != kSep && w != kUnk) tokens.push_back(w);
  }
  return VocabTokenizer(std::move(tokens));
}

std::vector<int> VocabTokenizer::encode(std::string_view text) const {
  if (!is_valid_utf8(text)) throw TokenizationError("invalid UTF-8 in input text");
  std::vector<int> ids;
  for (const auto& w : lower_words(text)) {
    const auto it = index_.find(w);
    ids.push_back(it == index_.end() ? unk_id() : it->second);
  }
  return ids;
}

TokenLayout TokenLayout::for_seq_len(std::size_t seq_len) {
  TokenLayout layout;
  if (seq_len < layout.keyword_slot + 4) {
    throw DomainError("sequence length " + std::to_string(seq_len) +
                      " too short for the keyword layout");
  }
  layout.text_slot = seq_len - layout.keyword_slot - 3;
  return layout;
}

TokenizedExample tokenize_sample(const Sample& sample, const Tokenizer& tok,
                                 const TokenLayout& layout) {
  std::vector<int> keyword_ids;
  std::vector<int> text_ids;
  try {
    keyword_ids = tok.encode(keyword_text(sample.keyword));
    text_ids = tok.encode(sample.text);
  } catch (const std::exception& e) {
    throw TokenizationError("sample " + sample.par_id + ": " + e.what());
  }
  TokenizedExample ex;
  ex.par_id = sample.par_id;
  ex.binary_label = sample.binary_label;
  ex.category_labels = sample.category_labels;
  ex.token_ids.reserve(layout.seq_len());
  ex.attention_mask.reserve(layout.seq_len());
  ex.token_ids.push_back(tok.cls_id());
  ex.attention_mask.push_back(1);
  fill_slot(ex.token_ids, ex.attention_mask, keyword_ids, layout.keyword_slot, tok.pad_id());
  ex.token_ids.push_back(tok.sep_id());
  ex.attention_mask.push_back(1);
  fill_slot(ex.token_ids, ex.attention_mask, text_ids, layout.text_slot, tok.pad_id());
  ex.token_ids.push_back(tok.sep_id());
  ex.attention_mask.push_back(1);
  return ex;
}

std::vector<TokenizedExample> batch_tokenize(const std::vector<Sample>& samples,
                                             const Tokenizer& tok, const TokenLayout& layout) {
  std::vector<TokenizedExample> out;
  out.reserve(samples.size());
  std::string failures;
  std::size_t n_failed = 0;
  for (const auto& s : samples) {
    try {
      out.push_back(tokenize_sample(s, tok, layout));
    } catch (const TokenizationError& e) {
      ++n_failed;
      failures += std::string("\n  ") + e.what();
    }
  }
  if (n_failed) {
    throw TokenizationError(std::to_string(n_failed) + " sample(s) failed to tokenize:" +
                            failures);
  }
  return out;
}

}  // namespace pcl
