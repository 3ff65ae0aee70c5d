#include "doctest.h"

#include "pcl/tokenize.hpp"
#include "support.hpp"

using namespace pcl;

namespace {

VocabTokenizer small_vocab() {
  return VocabTokenizer({"<s>", "<pad>", "</s>", "<unk>", "women", "the", "poor", "families", "help",
                         "in", "need", "w0", "w1", "w2", "w3", "w4"});
}

void check_layout(const TokenizedExample& ex, const Tokenizer& tok, std::size_t len) {
  REQUIRE(ex.token_ids.size() == len);
  REQUIRE(ex.attention_mask.size() == len);
  CHECK(ex.token_ids[0] == tok.cls_id());
  std::size_t last = 0;
  for (std::size_t i = 0; i < len; ++i) {
    CHECK(ex.attention_mask[i] == (ex.token_ids[i] == tok.pad_id() ? 0 : 1));
    if (ex.attention_mask[i]) last = i;
  }
  CHECK(ex.token_ids[last] == tok.sep_id());
}

}  // namespace

TEST_SUITE("tokenize") {

TEST_CASE("default layout is 106 tokens") {
  const TokenLayout layout;
  CHECK(layout.seq_len() == 106);
  CHECK(TokenLayout::for_seq_len(30).text_slot == 24);
  CHECK(TokenLayout::for_seq_len(106).text_slot == 100);
}

TEST_CASE("empty text keeps the slot structure") {
  const auto tok = small_vocab();
  auto s = pcl::test::make_sample("e", 0, "", "women");
  const auto ex = tokenize_sample(s, tok);
  check_layout(ex, tok, 106);
  CHECK(ex.token_ids[1] == 4);
  CHECK(ex.token_ids[2] == tok.pad_id());
  CHECK(ex.token_ids[3] == tok.pad_id());
  CHECK(ex.token_ids[4] == tok.sep_id());
  for (std::size_t i = 5; i < 105; ++i) {
    CHECK(ex.token_ids[i] == tok.pad_id());
    CHECK(ex.attention_mask[i] == 0);
  }
  CHECK(ex.token_ids[105] == tok.sep_id());
  CHECK(ex.attention_mask[105] == 1);
}

TEST_CASE("hyphenated keywords become separate words") {
  const auto tok = small_vocab();
  const auto ex = tokenize_sample(pcl::test::make_sample("k", 0, "help", "poor-families"), tok);
  CHECK(ex.token_ids[1] == 6);
  CHECK(ex.token_ids[2] == 7);
  CHECK(ex.token_ids[3] == tok.pad_id());
}

TEST_CASE("long paragraphs keep the first 100 text ids") {
  const auto tok = small_vocab();
  std::string text;
  for (int i = 0; i < 300; ++i) text += "w" + std::to_string(i % 7) + " ";
  const auto ex = tokenize_sample(pcl::test::make_sample("l", 0, text, "women"), tok);
  const auto ids = tok.encode(text);
  REQUIRE(ids.size() == 300);
  check_layout(ex, tok, 106);
  for (std::size_t i = 0; i < 100; ++i) CHECK(ex.token_ids[5 + i] == ids[i]);
}

TEST_CASE("random texts always fit the layout") {
  Rng rng(99);
  const auto vocab = VocabTokenizer::build(pcl::test::toy_corpus(50, 1));
  for (int trial = 0; trial < 300; ++trial) {
    const auto s = pcl::test::make_sample("r", 0, pcl::test::random_words(rng, rng.below(250)),
                                          std::string(kKeywords[rng.below(kKeywords.size())]));
    check_layout(tokenize_sample(s, vocab), vocab, 106);
    check_layout(tokenize_sample(s, vocab, TokenLayout::for_seq_len(30)), vocab, 30);
  }
}

TEST_CASE("appending words never changes the kept prefix") {
  Rng rng(5);
  const auto vocab = VocabTokenizer::build(pcl::test::toy_corpus(50, 1));
  for (int trial = 0; trial < 100; ++trial) {
    const auto base = pcl::test::random_words(rng, rng.below(140));
    const auto more = base + " " + pcl::test::random_words(rng, 1 + rng.below(40));
    const auto a = tokenize_sample(pcl::test::make_sample("a", 0, base), vocab);
    const auto b = tokenize_sample(pcl::test::make_sample("a", 0, more), vocab);
    const auto n = std::min<std::size_t>(vocab.encode(base).size(), 100);
    for (std::size_t i = 0; i < n; ++i) CHECK(a.token_ids[5 + i] == b.token_ids[5 + i]);
  }
}

TEST_CASE("encoding is deterministic and case-insensitive") {
  const auto tok = small_vocab();
  CHECK(tok.encode("The  POOR\tfamilies") == std::vector<int>{5, 6, 7});
  CHECK(tok.encode("unseen") == std::vector<int>{tok.unk_id()});
  CHECK(tok.encode("") .empty());
}

TEST_CASE("invalid UTF-8 fails with the paragraph id") {
  const auto tok = small_vocab();
  CHECK_FALSE(is_valid_utf8("bad \xc3"));
  CHECK_FALSE(is_valid_utf8("\xff"));
  CHECK(is_valid_utf8("caf\xc3\xa9 \xe2\x82\xac"));
  try {
    tokenize_sample(pcl::test::make_sample("p42", 0, "bad \xc3"), tok);
    FAIL("expected a tokenization error");
  } catch (const TokenizationError& e) {
    CHECK(std::string(e.what()).find("p42") != std::string::npos);
  }
  std::vector<Sample> batch = {pcl::test::make_sample("ok", 0, "help"),
                               pcl::test::make_sample("b1", 0, "\xff"),
                               pcl::test::make_sample("b2", 0, "x \xc3")};
  try {
    batch_tokenize(batch, tok);
    FAIL("expected a tokenization error");
  } catch (const TokenizationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("b1") != std::string::npos);
    CHECK(msg.find("b2") != std::string::npos);
  }
}

TEST_CASE("batch preserves order") {
  const auto tok = small_vocab();
  CHECK(batch_tokenize({}, tok).empty());
  const auto out = batch_tokenize(
      {pcl::test::make_sample("x", 1, "help"), pcl::test::make_sample("y", 0, "women")}, tok);
  REQUIRE(out.size() == 2);
  CHECK(out[0].par_id == "x");
  CHECK(out[0].binary_label == 1);
  CHECK(out[1].par_id == "y");
}

TEST_CASE("vocabulary build, save and load") {
  pcl::test::TempDir dir;
  std::vector<Sample> s = {pcl::test::make_sample("1", 0, "b a a c", "women"),
                           pcl::test::make_sample("2", 0, "b a", "women")};
  const auto v = VocabTokenizer::build(s);
  // a:3, b:2, women:2, c:1 -> frequency then lexical order
  CHECK(v.tokens() == std::vector<std::string>{"<s>", "<pad>", "</s>", "<unk>", "a", "b", "women", "c"});
  CHECK(VocabTokenizer::build(s, 2).vocab_size() == 7);
  v.save(dir.file("v.txt"));
  CHECK(VocabTokenizer::load(dir.file("v.txt")).tokens() == v.tokens());
  CHECK_THROWS(VocabTokenizer({"a", "b"}));
}

}
