#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcl/augment.hpp"
#include "pcl/balance.hpp"
#include "pcl/checkpoint.hpp"
#include "pcl/corpus.hpp"
#include "pcl/model.hpp"
#include "pcl/tokenize.hpp"

namespace pcl {

// Augmentation x loss-weighting grid.
enum class ExperimentName { basic, aug, wt, aug_wt };

std::string to_string(ExperimentName n);
ExperimentName parse_experiment_name(std::string_view s);
bool uses_augmentation(ExperimentName n);
bool uses_loss_weighting(ExperimentName n);
ExperimentName experiment_for(bool augment, bool loss_weighting);

// Random streams derived from the single run seed.
enum class SeedStream : std::uint64_t { model_init = 0, shuffle = 1, augmentation = 2, split = 3 };
inline std::uint64_t stream_seed(std::uint64_t seed, SeedStream s) {
  return derive_seed(seed, static_cast<std::uint64_t>(s));
}

struct ExperimentSpec {
  ExperimentName name = ExperimentName::basic;
  bool augment = false;
  bool loss_weighting = false;
  double beta = kDefaultBeta;
  Subtask subtask = Subtask::a;
  HeadKind head = HeadKind::fnn;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double lr = 1e-6;
  double adam_eps = 1e-6;
  std::uint64_t seed = 0;

  EncoderConfig encoder;  // vocab_size is taken from the tokenizer
  HeadConfig head_config;
  bool freeze_encoder = false;
  double aug_fraction = 0.30;

  // Throws ConfigError when name and flags disagree or a value is out of range.
  void validate() const;
};

// All four experiments crossed with all four heads, each otherwise equal to
// `base`; experiment-major order.
std::vector<ExperimentSpec> experiment_grid(const ExperimentSpec& base);

// Directory-safe run label, e.g. "AUG-WT_BLS-CNN".
std::string run_label(const ExperimentSpec& spec);

struct RunConfig {
  ExperimentSpec experiment;
  std::string train_path;
  std::string val_path;
  std::string augmented_train_path;  // persisted output of the augment command
  std::string vocab_path;
  std::string out_dir;
  LabelMode label_mode = LabelMode::binary;
};

// `key = value` lines, '#' comments. Keys mirror ExperimentSpec fields plus
// the RunConfig paths and model-size keys. `overrides` win over file values.
// Unknown keys and malformed values raise ConfigError naming the key.
RunConfig parse_run_config(std::string_view text,
                           const std::map<std::string, std::string>& overrides = {});
std::vector<std::string> run_config_keys();
std::string format_run_config(const RunConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_metric = 0.0;
  std::string checkpoint_path;
  std::vector<ClassWeights> class_weights;  // one per output head
  std::size_t train_size = 0;
  std::size_t augmented = 0;
  std::vector<std::string> warnings;
};

// Lines of `epoch \t train_loss \t val_metric`.
std::string format_train_log(const TrainLog& log);

// 1-based argmax; ties resolve to the earliest epoch. Throws on empty input.
std::size_t select_best(std::span<const double> metrics);

struct ExperimentData {
  Partition train;
  Partition val;
  // Persisted augmented train set (train + "_bt" copies). Used instead of
  // on-the-fly augmentation when present.
  std::optional<std::vector<Sample>> augmented_train;
};

// Per-head [negative, positive] counts of `samples` for the subtask.
std::vector<std::array<std::size_t, 2>> class_counts(const std::vector<Sample>& samples,
                                                     Subtask subtask);

// Weights per head; unit weights unless spec.loss_weighting. Classes absent
// from the training data are counted as 1.
std::vector<ClassWeights> experiment_class_weights(const ExperimentSpec& spec,
                                                   const std::vector<Sample>& train);

// Mean over heads of the weighted cross-entropy of one example; fills the
// per-head logit gradients of that mean.
double example_loss(const HeadOutput& out, const TokenizedExample& ex, Subtask subtask,
                    const std::vector<ClassWeights>& weights, std::vector<Logits>* grads);

double mean_loss(Model& model, const std::vector<TokenizedExample>& examples,
                 const std::vector<ClassWeights>& weights);

// Trains for spec.epochs, scoring the validation partition after every
// epoch and keeping the best checkpoint (by F1 for A, macro-F1 for B) at
// out_dir/best.ckpt. Also writes train_log.tsv and class_weights.tsv.
TrainLog run_experiment(const ExperimentSpec& spec, const ExperimentData& data,
                        const VocabTokenizer& tok, const std::string& out_dir,
                        const Translator* translator = nullptr, std::ostream* progress = nullptr);

struct Predictions {
  Subtask subtask = Subtask::a;
  std::vector<std::vector<int>> rows;  // 1 or 7 entries each
};

int argmax(const Logits& z);
Predictions predict(Model& model, const std::vector<TokenizedExample>& examples);
// Tokenizes with the checkpoint's vocabulary. CompatibilityError when
// `expected` is set and differs from the checkpoint's subtask.
Predictions predict(Checkpoint& ckpt, const std::vector<Sample>& samples,
                    std::optional<Subtask> expected = std::nullopt);

// Subtask A: one integer per line. Subtask B: seven comma-separated integers.
std::string format_predictions(const Predictions& p);
// FormatError on rows of the wrong arity or non-0/1 values.
Predictions parse_predictions(std::string_view text, Subtask subtask);
Predictions gold_labels(const std::vector<Sample>& samples, Subtask subtask);

// F1 (A) or macro-F1 (B).
double selection_metric(const Predictions& gold, const Predictions& pred);

}  // namespace pcl
