#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pcl/corpus.hpp"
#include "pcl/errors.hpp"

namespace pcl {

// One text could not be translated; augmentation skips it.
class TranslationError : public Error {
 public:
  using Error::Error;
};

// The translation backend cannot be reached at all; augmentation aborts.
class TranslatorUnavailable : public TranslationError {
 public:
  using TranslationError::TranslationError;
};

// Source -> pivot -> source language pair. Implementations must be safe to
// call from several threads.
class Translator {
 public:
  virtual ~Translator() = default;
  virtual std::string forward(std::string_view text) const = 0;
  virtual std::string backward(std::string_view text) const = 0;
};

class IdentityTranslator final : public Translator {
 public:
  std::string forward(std::string_view text) const override { return std::string(text); }
  std::string backward(std::string_view text) const override { return std::string(text); }
};

struct HttpTranslatorConfig {
  std::string endpoint;  // scheme://host:port
  std::string source_lang = "en";
  std::string pivot_lang = "fr";
  double timeout_seconds = 30.0;
  int retries = 2;
};

// Plain-text translation over HTTP:
//   POST {endpoint}/translate/{from}/{to}   body and response: UTF-8 text/plain
// Retries transport failures and 5xx responses; a 4xx response fails the
// text immediately.
class HttpTranslator final : public Translator {
 public:
  explicit HttpTranslator(HttpTranslatorConfig cfg);
  std::string forward(std::string_view text) const override;
  std::string backward(std::string_view text) const override;

 private:
  std::string call(const std::string& from, const std::string& to, std::string_view text) const;
  HttpTranslatorConfig cfg_;
};

inline constexpr std::string_view kBackTranslationSuffix = "_bt";

struct AugmentationConfig {
  double fraction = 0.30;
  std::uint64_t seed = 0;
  bool positive_only = true;

  void validate() const;
};

// floor(fraction * |pool|) distinct samples drawn uniformly without
// replacement from the pool (positives, or everything when !positive_only).
// Returned in input order.
std::vector<Sample> select_for_augmentation(const std::vector<Sample>& samples,
                                            const AugmentationConfig& cfg);

struct BackTranslation {
  std::vector<Sample> samples;
  std::vector<std::string> warnings;
};

// text := backward(forward(text)), par_id gains the "_bt" suffix, every other
// field is copied. Per-sample failures (including empty output) are skipped
// with a warning; TranslatorUnavailable propagates.
BackTranslation back_translate(const std::vector<Sample>& samples, const Translator& tr,
                               unsigned threads = 1);

struct AugmentedTrainSet {
  std::vector<Sample> samples;  // original train followed by augmented copies
  std::vector<std::string> selected_ids;
  std::vector<std::string> warnings;
};

// Throws LeakageError unless `train` is a training partition.
AugmentedTrainSet build_augmented_train_set(const Partition& train,
                                            const AugmentationConfig& cfg,
                                            const Translator& tr, unsigned threads = 1);

// par_id with any "_bt" suffixes removed.
std::string source_par_id(std::string_view par_id);

// Throws LeakageError if any sample (after stripping augmentation suffixes)
// is not a member of split.train_ids.
void audit_train_provenance(const std::vector<Sample>& samples, const SplitSpec& split);

}  // namespace pcl
