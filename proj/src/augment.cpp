#include "pcl/augment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>

#include "pcl/rng.hpp"

namespace pcl {

namespace {

std::string sanitize(std::string text) {
  for (auto& c : text) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return text;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

void AugmentationConfig::validate() const {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw DomainError("augmentation fraction must lie in [0,1], got " + std::to_string(fraction));
  }
}

std::vector<Sample> select_for_augmentation(const std::vector<Sample>& samples,
                                            const AugmentationConfig& cfg) {
  cfg.validate();
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!cfg.positive_only || samples[i].binary_label == 1) pool.push_back(i);
  }
  const auto k = static_cast<std::size_t>(std::floor(cfg.fraction * static_cast<double>(pool.size())));
  // Partial Fisher-Yates: the first k slots are a uniform draw without replacement.
  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  std::vector<Sample> out;
  out.reserve(k);
  for (auto i : pool) out.push_back(samples[i]);
  return out;
}

BackTranslation back_translate(const std::vector<Sample>& samples, const Translator& tr,
                               unsigned threads) {
  std::vector<std::optional<Sample>> results(samples.size());
  std::vector<std::string> errors(samples.size());
  std::exception_ptr fatal;
  std::mutex fatal_mu;

  auto work = [&](std::size_t i) {
    const Sample& src = samples[i];
    try {
      std::string text = sanitize(tr.backward(tr.forward(src.text)));
      if (blank(text)) throw TranslationError("translator returned empty text");
      Sample out = src;
      out.par_id += kBackTranslationSuffix;
      out.text = std::move(text);
      results[i] = std::move(out);
    } catch (const TranslatorUnavailable&) {
      std::lock_guard lock(fatal_mu);
      if (!fatal) fatal = std::current_exception();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };

  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(samples.size())));
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < samples.size() && !fatal; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < samples.size(); i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  BackTranslation bt;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (results[i]) {
      bt.samples.push_back(std::move(*results[i]));
    } else {
      bt.warnings.push_back("back-translation skipped " + samples[i].par_id + ": " + errors[i]);
    }
  }
  return bt;
}

AugmentedTrainSet build_augmented_train_set(const Partition& train, const AugmentationConfig& cfg,
                                            const Translator& tr, unsigned threads) {
  if (train.role != PartitionRole::train) {
    throw LeakageError("augmentation requested on a validation partition");
  }
  AugmentedTrainSet out;
  out.samples = train.samples;
  const auto selected = select_for_augmentation(train.samples, cfg);
  for (const auto& s : selected) out.selected_ids.push_back(s.par_id);
  auto bt = back_translate(selected, tr, threads);
  out.warnings = std::move(bt.warnings);
  for (auto& s : bt.samples) out.samples.push_back(std::move(s));
  return out;
}

std::string source_par_id(std::string_view par_id) {
  while (par_id.size() > kBackTranslationSuffix.size() &&
         par_id.substr(par_id.size() - kBackTranslationSuffix.size()) == kBackTranslationSuffix) {
    par_id.remove_suffix(kBackTranslationSuffix.size());
  }
  return std::string(par_id);
}

void audit_train_provenance(const std::vector<Sample>& samples, const SplitSpec& split) {
  for (const auto& s : samples) {
    const auto src = source_par_id(s.par_id);
    if (!split.train_ids.count(src)) {
      throw LeakageError("sample " + s.par_id + " does not derive from a training id" +
                         (split.val_ids.count(src) ? " (it is a validation id)" : ""));
    }
  }
}

}  // namespace pcl
