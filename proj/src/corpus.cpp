#include "pcl/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcl/errors.hpp"
#include "pcl/rng.hpp"

namespace pcl {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Calls fn(line_number, line) for each line; line numbers are 1-based.
template <class Fn>
void for_each_line(std::string_view content, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < content.size()) {
    auto end = content.find('\n', start);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = end + 1;
  }
}

int parse_int(std::string_view field, const std::string& where) {
  field = trim(field);
  int value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty()) {
    throw ParseError(where + ": expected integer, got '" + std::string(field) + "'");
  }
  return value;
}

CategoryLabels parse_category_bits(std::string_view field, const std::string& where) {
  CategoryLabels bits{};
  std::size_t i = 0;
  std::size_t start = 0;
  while (true) {
    const auto pos = field.find(',', start);
    const auto part = field.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                         : pos - start);
    if (i >= kNumCategories) throw ParseError(where + ": more than 7 category bits");
    const int b = parse_int(part, where);
    if (b != 0 && b != 1) throw ValidationError(where + ": category bit must be 0 or 1");
    bits[i++] = b;
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (i != kNumCategories) throw ParseError(where + ": expected 7 category bits");
  return bits;
}

std::string location(const std::string& source, std::size_t line_no) {
  return source + ":" + std::to_string(line_no);
}

}  // namespace

std::string canonical_keyword(std::string_view raw) {
  std::string k = lower(trim(raw));
  std::replace(k.begin(), k.end(), ' ', '-');
  for (auto kw : kKeywords) {
    if (k == kw) return k;
  }
  return {};
}

int category_index(std::string_view name) {
  static const std::array<std::string_view, kNumCategories> upstream = {
      "unbalanced_power_relations", "shallow_solution", "presupposition", "authority_voice",
      "metaphors",                  "compassion",       "the_poorer_the_merrier"};
  const std::string key = lower(trim(name));
  for (std::size_t i = 0; i < kNumCategories; ++i) {
    if (key == lower(kCategoryCodes[i]) || key == upstream[i]) return static_cast<int>(i);
  }
  // Singular spelling used in some releases.
  if (key == "metaphor") return 4;
  return -1;
}

void validate_sample(const Sample& s) {
  const std::string who = "sample " + s.par_id;
  if (s.par_id.empty()) throw ValidationError("sample with empty par_id");
  if (s.binary_label != 0 && s.binary_label != 1) {
    throw ValidationError(who + ": binary label must be 0 or 1");
  }
  for (int b : s.category_labels) {
    if (b != 0 && b != 1) throw ValidationError(who + ": category bit must be 0 or 1");
  }
  if (s.binary_label == 0 &&
      std::any_of(s.category_labels.begin(), s.category_labels.end(), [](int b) { return b; })) {
    throw ValidationError(who + ": negative sample carries category labels");
  }
  if (canonical_keyword(s.keyword) != s.keyword) {
    throw ValidationError(who + ": unknown keyword '" + s.keyword + "'");
  }
  if (trim(s.text).empty()) throw ValidationError(who + ": empty text");
}

std::vector<Sample> parse_corpus(std::string_view content, LabelMode mode,
                                 const std::string& source) {
  std::vector<Sample> samples;
  bool in_data = false;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (!in_data && line.find('\t') == std::string_view::npos) return;  // preamble
    if (trim(line).empty()) return;
    const auto fields = split_tabs(line);
    const bool first = !in_data;
    in_data = true;
    if (first && trim(fields[0]) == "par_id") return;  // header
    const std::string where = location(source, line_no);
    const bool unlabelled = mode == LabelMode::none;
    if (fields.size() != 6 && fields.size() != 7 && !(unlabelled && fields.size() == 5)) {
      throw ParseError(where + ": expected " + (unlabelled ? "5, " : "") +
                       "6 or 7 tab-separated columns, got " + std::to_string(fields.size()));
    }
    Sample s;
    s.par_id = std::string(trim(fields[0]));
    s.art_id = std::string(trim(fields[1]));
    s.keyword = canonical_keyword(fields[2]);
    if (s.keyword.empty()) {
      throw ValidationError(where + ": unknown keyword '" + std::string(fields[2]) + "'");
    }
    s.country = std::string(trim(fields[3]));
    s.text = std::string(fields[4]);
    if (unlabelled) {
      if (trim(s.text).empty()) throw ValidationError(where + ": empty text");
      samples.push_back(std::move(s));
      return;
    }
    const int raw = parse_int(fields[5], where);
    if (mode == LabelMode::binary) {
      if (raw != 0 && raw != 1) {
        throw ValidationError(where + ": label " + std::to_string(raw) + " outside {0,1}");
      }
      s.binary_label = raw;
    } else {
      if (raw < 0 || raw > 4) {
        throw ValidationError(where + ": label " + std::to_string(raw) + " outside 0-4");
      }
      s.binary_label = raw >= 2 ? 1 : 0;
    }
    if (fields.size() == 7 && !trim(fields[6]).empty()) {
      s.category_labels = parse_category_bits(fields[6], where);
    }
    try {
      validate_sample(s);
    } catch (const ValidationError& e) {
      throw ValidationError(where + ": " + e.what());
    }
    samples.push_back(std::move(s));
  });
  return samples;
}

std::vector<Sample> load_corpus(const std::string& path, LabelMode mode) {
  return parse_corpus(read_file(path), mode, path);
}

std::string format_corpus(const std::vector<Sample>& samples) {
  std::string out = "par_id\tart_id\tkeyword\tcountry\ttext\tlabel\tcategories\n";
  for (const auto& s : samples) {
    if (s.text.find_first_of("\t\n\r") != std::string::npos) {
      throw ValidationError("sample " + s.par_id + ": text contains tab or newline");
    }
    out += s.par_id + '\t' + s.art_id + '\t' + s.keyword + '\t' + s.country + '\t' + s.text +
           '\t' + std::to_string(s.binary_label) + '\t';
    for (std::size_t i = 0; i < kNumCategories; ++i) {
      if (i) out += ',';
      out += std::to_string(s.category_labels[i]);
    }
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string& path, const std::vector<Sample>& samples) {
  const std::string content = format_corpus(samples);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::unordered_map<std::string, CategoryLabels> parse_category_spans(std::string_view content,
                                                                     const std::string& source) {
  std::unordered_map<std::string, CategoryLabels> out;
  bool in_data = false;
  for_each_line(content, [&](std::size_t line_no, std::string_view line) {
    if (!in_data && line.find('\t') == std::string_view::npos) return;
    if (trim(line).empty()) return;
    const auto fields = split_tabs(line);
    const bool first = !in_data;
    in_data = true;
    if (first && trim(fields[0]) == "par_id") return;
    const std::string where = location(source, line_no);
    if (fields.size() != 10) {
      throw ParseError(where + ": expected 10 tab-separated columns, got " +
                       std::to_string(fields.size()));
    }
    const int idx = category_index(fields[8]);
    if (idx < 0) {
      throw ValidationError(where + ": unknown category '" + std::string(fields[8]) + "'");
    }
    out[std::string(trim(fields[0]))][static_cast<std::size_t>(idx)] = 1;
  });
  return out;
}

std::unordered_map<std::string, CategoryLabels> load_category_spans(const std::string& path) {
  return parse_category_spans(read_file(path), path);
}

void attach_categories(std::vector<Sample>& samples,
                       const std::unordered_map<std::string, CategoryLabels>& spans) {
  for (auto& s : samples) {
    const auto it = spans.find(s.par_id);
    if (it == spans.end()) continue;
    if (s.binary_label == 0) {
      throw ValidationError("sample " + s.par_id + ": category spans on a negative paragraph");
    }
    s.category_labels = it->second;
  }
}

std::set<std::string> load_id_list(const std::string& path) {
  std::set<std::string> ids;
  for_each_line(read_file(path), [&](std::size_t, std::string_view line) {
    const auto id = trim(line);
    if (!id.empty()) ids.emplace(id);
  });
  return ids;
}

SplitSpec load_split(const std::string& train_ids_path, const std::string& val_ids_path) {
  return SplitSpec{load_id_list(train_ids_path), load_id_list(val_ids_path)};
}

SplitSpec make_random_split(const std::vector<Sample>& samples, double train_fraction,
                            std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw DomainError("train fraction must lie in [0,1]");
  }
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_train =
      static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(samples.size())));
  SplitSpec split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train_ids : split.val_ids).insert(samples[order[i]].par_id);
  }
  return split;
}

SplitResult apply_split(const std::vector<Sample>& samples, const SplitSpec& split) {
  std::vector<std::string> overlap;
  std::set_intersection(split.train_ids.begin(), split.train_ids.end(), split.val_ids.begin(),
                        split.val_ids.end(), std::back_inserter(overlap));
  if (!overlap.empty()) {
    throw ValidationError("split lists " + std::to_string(overlap.size()) +
                          " id(s) in both train and val, first: " + overlap.front());
  }
  std::set<std::string> seen;
  SplitResult out;
  out.train.role = PartitionRole::train;
  out.val.role = PartitionRole::validation;
  std::vector<std::string> uncovered;
  for (const auto& s : samples) {
    if (!seen.insert(s.par_id).second) {
      throw ValidationError("duplicate par_id " + s.par_id + " in corpus");
    }
    if (split.train_ids.count(s.par_id)) {
      out.train.samples.push_back(s);
    } else if (split.val_ids.count(s.par_id)) {
      out.val.samples.push_back(s);
    } else {
      uncovered.push_back(s.par_id);
    }
  }
  std::vector<std::string> missing;
  for (const auto* ids : {&split.train_ids, &split.val_ids}) {
    for (const auto& id : *ids) {
      if (!seen.count(id)) missing.push_back(id);
    }
  }
  auto listing = [](const std::vector<std::string>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size() && i < 10; ++i) s += (i ? ", " : "") + ids[i];
    if (ids.size() > 10) s += ", ...";
    return s;
  };
  if (!missing.empty()) {
    throw ValidationError("split references " + std::to_string(missing.size()) +
                          " id(s) absent from corpus: " + listing(missing));
  }
  if (!uncovered.empty()) {
    throw ValidationError(std::to_string(uncovered.size()) +
                          " corpus sample(s) not covered by split: " + listing(uncovered));
  }
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    if (std::any_of(current.begin(), current.end(),
                    [](unsigned char c) { return std::isalnum(c) || c >= 0x80; })) {
      out.push_back(current);
    }
    current.clear();
  };
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?') {
      flush();
    } else {
      current += c;
    }
  }
  flush();
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

CorpusStats compute_stats(const std::vector<Sample>& samples) {
  CorpusStats st;
  st.total = samples.size();
  for (const auto& s : samples) {
    const auto sentences = split_sentences(s.text);
    st.sentence_count_histogram[sentences.size() / kSentenceBinWidth * kSentenceBinWidth]++;
    for (const auto& sent : sentences) {
      st.words_per_sentence_histogram[count_words(sent) / kWordBinWidth * kWordBinWidth]++;
    }
    if (s.binary_label == 1) {
      ++st.positives;
      for (std::size_t c = 0; c < kNumCategories; ++c) {
        st.per_category_counts[c] += static_cast<std::size_t>(s.category_labels[c]);
      }
      if (count_words(s.text) > kLongTextWords) ++st.long_positives;
    }
  }
  st.long_positive_fraction =
      st.positives ? static_cast<double>(st.long_positives) / static_cast<double>(st.positives)
                   : 0.0;
  return st;
}

std::string render_stats(const CorpusStats& st) {
  std::ostringstream out;
  out << "samples\t" << st.total << "\n";
  out << "positives\t" << st.positives << "\n";
  out << "long_positives(>" << kLongTextWords << " words)\t" << st.long_positives << "\n";
  out << "long_positive_fraction\t" << std::fixed;
  out.precision(4);
  out << st.long_positive_fraction << "\n";
  out << "\n# positives per category\n";
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    out << kCategoryCodes[c] << "\t" << st.per_category_counts[c] << "\n";
  }
  out << "\n# sentences per sample (bin width " << kSentenceBinWidth << ")\n";
  for (const auto& [lo, n] : st.sentence_count_histogram) {
    out << "[" << lo << "," << lo + kSentenceBinWidth << ")\t" << n << "\n";
  }
  out << "\n# words per sentence (bin width " << kWordBinWidth << ")\n";
  for (const auto& [lo, n] : st.words_per_sentence_histogram) {
    out << "[" << lo << "," << lo + kWordBinWidth << ")\t" << n << "\n";
  }
  return out.str();
}

}  // namespace pcl
