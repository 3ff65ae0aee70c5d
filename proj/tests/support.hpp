#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "pcl/corpus.hpp"
#include "pcl/rng.hpp"

namespace pcl::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("pcl_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline Sample make_sample(const std::string& id, int label, const std::string& text = "some text",
                          const std::string& keyword = "homeless") {
  Sample s;
  s.par_id = id;
  s.art_id = "@" + id;
  s.keyword = keyword;
  s.country = "gb";
  s.text = text;
  s.binary_label = label;
  if (label == 1) s.category_labels[0] = 1;
  return s;
}

inline std::string random_words(Rng& rng, std::size_t n) {
  static const std::vector<std::string> words = {
      "help", "the",  "poor", "families", "need", "our", "hearts",  "go",   "out",
      "to",   "them", "new",  "policy",   "was",  "on",  "tuesday", "they", "deserve"};
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[rng.below(words.size())];
  }
  return out;
}

// Toy corpus with a learnable signal: positives use charity phrasing.
inline std::vector<Sample> toy_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 3 == 0 ? 1 : 0;
    const std::string text = label ? "we must help these poor souls " + random_words(rng, 4)
                                   : "the council approved a budget " + random_words(rng, 4);
    auto s = make_sample("p" + std::to_string(i), label, text,
                         std::string(kKeywords[i % kKeywords.size()]));
    if (label) s.category_labels[i % kNumCategories] = 1;
    out.push_back(s);
  }
  return out;
}

}  // namespace pcl::test
