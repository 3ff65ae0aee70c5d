#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pcl {

inline constexpr std::size_t kNumCategories = 7;

// Paragraph-level category order used everywhere (labels, heads, reports).
inline constexpr std::array<std::string_view, kNumCategories> kCategoryCodes = {
    "UPR", "SSL", "PS", "AV", "MTP", "CMP", "PM"};

// Closed vocabulary of vulnerable-group keywords, canonical spelling.
inline constexpr std::array<std::string_view, 10> kKeywords = {
    "disabled", "homeless",      "hopeless", "immigrant",  "in-need",
    "migrant",  "poor-families", "refugee",  "vulnerable", "women"};

using CategoryLabels = std::array<int, kNumCategories>;

struct Sample {
  std::string par_id;
  std::string art_id;
  std::string keyword;
  std::string country;
  std::string text;
  int binary_label = 0;
  CategoryLabels category_labels{};

  bool operator==(const Sample&) const = default;
};

enum class LabelMode {
  binary,  // label column already 0/1
  scale,   // raw 0-4 annotator agreement, positive when >= 2
  none,    // unlabelled input (5 columns accepted); labels read as 0
};

// Canonical keyword for `raw` (case-insensitive, space or hyphen), or empty
// string when it is not in the closed vocabulary.
std::string canonical_keyword(std::string_view raw);

// Index into kCategoryCodes for a code ("UPR") or upstream category name
// ("Unbalanced_power_relations"); -1 when unknown.
int category_index(std::string_view name);

// Throws ValidationError if `s` breaks a Sample invariant.
void validate_sample(const Sample& s);

// Reads the paragraph TSV:
//   par_id  art_id  keyword  country  text  label  [categories]
// The optional seventh column holds seven comma-separated 0/1 bits in
// kCategoryCodes order. An optional header row (first field "par_id") and a
// leading tab-free preamble are skipped.
std::vector<Sample> load_corpus(const std::string& path, LabelMode mode);
std::vector<Sample> parse_corpus(std::string_view content, LabelMode mode,
                                 const std::string& source = "<memory>");

// Inverse of load_corpus in binary mode. Always writes the category column.
void write_corpus(const std::string& path, const std::vector<Sample>& samples);
std::string format_corpus(const std::vector<Sample>& samples);

// Category span file (multiple rows per paragraph):
//   par_id art_id text keyword country span_start span_end span_text category annotators
// Span offsets are dropped; the result is a presence bit per category.
std::unordered_map<std::string, CategoryLabels> load_category_spans(const std::string& path);
std::unordered_map<std::string, CategoryLabels> parse_category_spans(
    std::string_view content, const std::string& source = "<memory>");

// Sets category_labels from `spans`. A paragraph with categories but
// binary_label 0 is a ValidationError.
void attach_categories(std::vector<Sample>& samples,
                       const std::unordered_map<std::string, CategoryLabels>& spans);

struct SplitSpec {
  std::set<std::string> train_ids;
  std::set<std::string> val_ids;
};

enum class PartitionRole { train, validation };

// Samples tagged with the split they came from. Train-only operations
// (augmentation) check the role.
struct Partition {
  PartitionRole role = PartitionRole::train;
  std::vector<Sample> samples;
};

struct SplitResult {
  Partition train;
  Partition val;
};

// Reads one par_id per line; blank lines ignored.
std::set<std::string> load_id_list(const std::string& path);
SplitSpec load_split(const std::string& train_ids_path, const std::string& val_ids_path);

// Seeded random split with round(train_fraction * n) training samples.
SplitSpec make_random_split(const std::vector<Sample>& samples, double train_fraction,
                            std::uint64_t seed);

// Partitions `samples` preserving input order. Throws ValidationError when the
// split names unknown ids, overlaps, or leaves samples uncovered.
SplitResult apply_split(const std::vector<Sample>& samples, const SplitSpec& split);

struct CorpusStats {
  std::size_t total = 0;
  std::size_t positives = 0;
  std::array<std::size_t, kNumCategories> per_category_counts{};
  // Keyed by the lower bin edge.
  std::map<std::size_t, std::size_t> sentence_count_histogram;     // width 2
  std::map<std::size_t, std::size_t> words_per_sentence_histogram;  // width 10
  std::size_t long_positives = 0;  // positives with > 75 words
  double long_positive_fraction = 0.0;
};

inline constexpr std::size_t kSentenceBinWidth = 2;
inline constexpr std::size_t kWordBinWidth = 10;
inline constexpr std::size_t kLongTextWords = 75;

// Splits on runs of '.', '!', '?'; segments without an alphanumeric
// character are dropped.
std::vector<std::string> split_sentences(std::string_view text);
std::size_t count_words(std::string_view text);

CorpusStats compute_stats(const std::vector<Sample>& samples);
std::string render_stats(const CorpusStats& stats);

}  // namespace pcl
