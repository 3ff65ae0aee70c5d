#include "doctest.h"

#include <atomic>
#include <set>
#include <thread>

#include "httplib.h"
#include "pcl/augment.hpp"
#include "pcl/errors.hpp"
#include "support.hpp"

using namespace pcl;
using pcl::test::make_sample;

namespace {

std::vector<Sample> positives(std::size_t n, std::size_t negatives = 0) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make_sample("p" + std::to_string(i), 1));
  for (std::size_t i = 0; i < negatives; ++i) out.push_back(make_sample("n" + std::to_string(i), 0));
  return out;
}

// Fails on the listed texts, upper-cases everything else.
class FaultyTranslator final : public Translator {
 public:
  explicit FaultyTranslator(std::set<std::string> bad) : bad_(std::move(bad)) {}
  std::string forward(std::string_view text) const override {
    if (bad_.count(std::string(text))) throw TranslationError("injected failure");
    std::string out(text);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }
  std::string backward(std::string_view text) const override { return std::string(text); }

 private:
  std::set<std::string> bad_;
};

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("floor of the fraction is selected") {
  AugmentationConfig cfg{0.30, 17, true};
  CHECK(select_for_augmentation(positives(993, 50), cfg).size() == 297);
  CHECK(select_for_augmentation(positives(10), cfg).size() == 3);
  CHECK(select_for_augmentation(positives(0, 20), cfg).empty());
  CHECK(select_for_augmentation(positives(7), AugmentationConfig{1.0, 1, true}).size() == 7);
  CHECK_THROWS_AS(AugmentationConfig({1.5, 1, true}).validate(), DomainError);
}

TEST_CASE("selection is seeded, distinct, positive and in input order") {
  const auto pool = positives(100, 100);
  AugmentationConfig cfg{0.3, 4, true};
  const auto a = select_for_augmentation(pool, cfg);
  CHECK(a == select_for_augmentation(pool, cfg));
  cfg.seed = 5;
  CHECK_FALSE(a == select_for_augmentation(pool, cfg));
  std::set<std::string> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].binary_label == 1);
    ids.insert(a[i].par_id);
    if (i) CHECK(std::stoi(a[i - 1].par_id.substr(1)) < std::stoi(a[i].par_id.substr(1)));
  }
  CHECK(ids.size() == a.size());
}

TEST_CASE("identity back-translation preserves text and labels") {
  auto s = make_sample("9", 1, "They deserve our pity");
  s.category_labels = {1, 0, 0, 0, 0, 1, 0};
  const auto out = back_translate({s}, IdentityTranslator{});
  REQUIRE(out.samples.size() == 1);
  CHECK(out.samples[0].par_id == "9_bt");
  CHECK(out.samples[0].text == s.text);
  CHECK(out.samples[0].binary_label == 1);
  CHECK(out.samples[0].category_labels == s.category_labels);
  CHECK(out.samples[0].keyword == s.keyword);
  CHECK(out.warnings.empty());
}

TEST_CASE("failures are skipped with a warning each") {
  std::vector<Sample> in;
  for (int i = 0; i < 297; ++i) in.push_back(make_sample(std::to_string(i), 1, "text " + std::to_string(i)));
  const FaultyTranslator tr({"text 10", "text 200"});
  for (unsigned threads : {1u, 4u}) {
    const auto out = back_translate(in, tr, threads);
    CHECK(out.samples.size() == 295);
    CHECK(out.warnings.size() == 2);
    CHECK(out.samples[0].text == "TEXT 0");
    CHECK(out.samples[10].par_id == "11_bt");
  }
}

TEST_CASE("augmented train set grows by the successful copies") {
  std::vector<Sample> train;
  for (int i = 0; i < 100; ++i) train.push_back(make_sample(std::to_string(i), i < 10 ? 1 : 0));
  const Partition part{PartitionRole::train, train};
  const auto out = build_augmented_train_set(part, {0.3, 8, true}, IdentityTranslator{});
  CHECK(out.samples.size() == 103);
  CHECK(out.selected_ids.size() == 3);
  CHECK(std::vector<Sample>(out.samples.begin(), out.samples.begin() + 100) == train);
  for (std::size_t i = 100; i < 103; ++i) CHECK(out.samples[i].binary_label == 1);
  CHECK(build_augmented_train_set(part, {0.0, 8, true}, IdentityTranslator{}).samples == train);
}

TEST_CASE("validation data cannot be augmented") {
  const Partition val{PartitionRole::validation, positives(10)};
  CHECK_THROWS_AS(build_augmented_train_set(val, {0.3, 1, true}, IdentityTranslator{}),
                  LeakageError);
}

TEST_CASE("provenance audit") {
  SplitSpec split{{"1", "2"}, {"3"}};
  CHECK(source_par_id("1_bt_bt") == "1");
  CHECK_NOTHROW(audit_train_provenance({make_sample("1", 1), make_sample("2_bt", 1)}, split));
  CHECK_THROWS_AS(audit_train_provenance({make_sample("3_bt", 1)}, split), LeakageError);
}

TEST_CASE("http translator round trip, retries and unreachable service") {
  httplib::Server svr;
  std::atomic<int> calls{0}, flaky{0};
  svr.Post(R"(/translate/(\w+)/(\w+))", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (req.body == "flaky" && flaky++ == 0) {
      res.status = 503;
      return;
    }
    if (req.body == "reject") {
      res.status = 400;
      return;
    }
    res.set_content("[" + req.matches[2].str() + "]" + req.body, "text/plain");
  });
  const int port = svr.bind_to_any_port("127.0.0.1");
  std::thread server([&] { svr.listen_after_bind(); });
  svr.wait_until_ready();

  HttpTranslator tr({"http://127.0.0.1:" + std::to_string(port), "en", "fr", 5.0, 2});
  CHECK(tr.forward("hello") == "[fr]hello");
  CHECK(tr.backward("bonjour") == "[en]bonjour");
  CHECK(tr.forward("flaky") == "[fr]flaky");
  CHECK_THROWS_AS(tr.forward("reject"), TranslationError);
  const auto out = back_translate({make_sample("1", 1, "hi"), make_sample("2", 1, "reject")}, tr, 2);
  CHECK(out.samples.size() == 1);
  CHECK(out.samples[0].text == "[en][fr]hi");
  CHECK(out.warnings.size() == 1);
  svr.stop();
  server.join();

  HttpTranslator dead({"http://127.0.0.1:1", "en", "fr", 1.0, 1});
  CHECK_THROWS_AS(dead.forward("x"), TranslatorUnavailable);
  CHECK_THROWS_AS(back_translate({make_sample("1", 1)}, dead), TranslatorUnavailable);
}

}
