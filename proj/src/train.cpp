#include "pcl/train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "pcl/metrics.hpp"
#include "pcl/optim.hpp"

namespace pcl {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const auto s = lower(v);
  if (s == "yes" || s == "true" || s == "1" || s == "on") return true;
  if (s == "no" || s == "false" || s == "0" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected yes/no, got '" + v + "'");
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected non-negative integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

template <class Fn>
auto as_config_error(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "name",          "augment",       "loss_weighting", "beta",         "subtask",
      "head",          "epochs",        "batch_size",     "lr",           "adam_eps",
      "seed",          "encoder",       "seq_len",        "hidden_dim",   "encoder_weights",
      "head_scale",    "dense_units",   "lstm_units",     "conv1_filters", "conv1_kernel",
      "conv2_filters", "conv2_kernel",  "pool",           "bilstm_readout", "freeze_encoder",
      "aug_fraction",  "train",         "val",            "augmented_train", "vocab",
      "out_dir",       "label_mode"};
  return keys;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path + " (disk full?)");
}

std::set<std::string> ids_of(const std::vector<Sample>& samples) {
  std::set<std::string> ids;
  for (const auto& s : samples) ids.insert(s.par_id);
  return ids;
}

// Validation data must be the untouched validation partition.
void check_no_leakage(const ExperimentData& data, const std::vector<Sample>& train) {
  if (data.val.role != PartitionRole::validation) {
    throw LeakageError("validation metric requested on a non-validation partition");
  }
  if (data.train.role != PartitionRole::train) {
    throw LeakageError("training on a non-training partition");
  }
  std::set<std::string> train_src;
  for (const auto& s : train) train_src.insert(source_par_id(s.par_id));
  for (const auto& s : data.val.samples) {
    if (source_par_id(s.par_id) != s.par_id) {
      throw LeakageError("validation sample " + s.par_id + " is an augmented copy");
    }
    if (train_src.count(s.par_id)) {
      throw LeakageError("validation sample " + s.par_id + " also appears in training data");
    }
  }
}

}  // namespace

// ------------------------------------------------------------- experiment grid

std::string to_string(ExperimentName n) {
  switch (n) {
    case ExperimentName::basic: return "BASIC";
    case ExperimentName::aug: return "AUG";
    case ExperimentName::wt: return "WT";
    case ExperimentName::aug_wt: return "AUG+WT";
  }
  return "?";
}

ExperimentName parse_experiment_name(std::string_view s) {
  const auto k = lower(trim(s));
  if (k == "basic") return ExperimentName::basic;
  if (k == "aug") return ExperimentName::aug;
  if (k == "wt") return ExperimentName::wt;
  if (k == "aug+wt" || k == "aug_wt" || k == "aug-wt") return ExperimentName::aug_wt;
  throw DomainError("unknown experiment '" + std::string(s) + "' (BASIC, AUG, WT, AUG+WT)");
}

bool uses_augmentation(ExperimentName n) {
  return n == ExperimentName::aug || n == ExperimentName::aug_wt;
}

bool uses_loss_weighting(ExperimentName n) {
  return n == ExperimentName::wt || n == ExperimentName::aug_wt;
}

ExperimentName experiment_for(bool augment, bool loss_weighting) {
  if (augment) return loss_weighting ? ExperimentName::aug_wt : ExperimentName::aug;
  return loss_weighting ? ExperimentName::wt : ExperimentName::basic;
}

void ExperimentSpec::validate() const {
  if (augment != uses_augmentation(name) || loss_weighting != uses_loss_weighting(name)) {
    throw ConfigError("experiment " + to_string(name) + " requires augment=" +
                      (uses_augmentation(name) ? "yes" : "no") + " and loss_weighting=" +
                      (uses_loss_weighting(name) ? "yes" : "no"));
  }
  if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("config key 'beta': must lie in [0,1)");
  if (epochs == 0) throw ConfigError("config key 'epochs': must be positive");
  if (batch_size == 0) throw ConfigError("config key 'batch_size': must be positive");
  if (!(lr > 0.0)) throw ConfigError("config key 'lr': must be positive");
  if (!(adam_eps > 0.0)) throw ConfigError("config key 'adam_eps': must be positive");
  if (!(aug_fraction >= 0.0 && aug_fraction <= 1.0)) {
    throw ConfigError("config key 'aug_fraction': must lie in [0,1]");
  }
}

std::vector<ExperimentSpec> experiment_grid(const ExperimentSpec& base) {
  std::vector<ExperimentSpec> out;
  for (auto name : {ExperimentName::basic, ExperimentName::aug, ExperimentName::wt,
                    ExperimentName::aug_wt}) {
    for (auto head : {HeadKind::fnn, HeadKind::bilstm, HeadKind::cnn, HeadKind::bls_cnn}) {
      ExperimentSpec e = base;
      e.name = name;
      e.augment = uses_augmentation(name);
      e.loss_weighting = uses_loss_weighting(name);
      e.head = head;
      out.push_back(e);
    }
  }
  return out;
}

std::string run_label(const ExperimentSpec& spec) {
  std::string name = to_string(spec.name);
  std::replace(name.begin(), name.end(), '+', '-');
  return name + "_" + to_string(spec.head);
}

std::vector<std::string> run_config_keys() { return known_keys(); }

RunConfig parse_run_config(std::string_view text,
                           const std::map<std::string, std::string>& overrides) {
  std::map<std::string, std::string> kv;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    kv[std::string(trim(body.substr(0, eq)))] = std::string(trim(body.substr(eq + 1)));
  }
  for (const auto& [k, v] : overrides) kv[k] = v;
  const auto& keys = known_keys();
  for (const auto& [k, v] : kv) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown config key '" + k + "'");
    }
  }
  auto get = [&](const std::string& k) -> const std::string* {
    const auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };

  RunConfig cfg;
  auto& e = cfg.experiment;
  const bool aug_given = get("augment") != nullptr;
  const bool wt_given = get("loss_weighting") != nullptr;
  if (aug_given) e.augment = parse_bool("augment", *get("augment"));
  if (wt_given) e.loss_weighting = parse_bool("loss_weighting", *get("loss_weighting"));
  if (const auto* v = get("name")) {
    e.name = as_config_error("name", [&] { return parse_experiment_name(*v); });
    if (!aug_given) e.augment = uses_augmentation(e.name);
    if (!wt_given) e.loss_weighting = uses_loss_weighting(e.name);
  } else {
    e.name = experiment_for(e.augment, e.loss_weighting);
  }
  if (const auto* v = get("beta")) e.beta = parse_real("beta", *v);
  if (const auto* v = get("subtask")) e.subtask = as_config_error("subtask", [&] { return parse_subtask(*v); });
  if (const auto* v = get("head")) e.head = as_config_error("head", [&] { return parse_head_kind(*v); });
  if (const auto* v = get("epochs")) e.epochs = parse_uint("epochs", *v);
  if (const auto* v = get("batch_size")) e.batch_size = parse_uint("batch_size", *v);
  if (const auto* v = get("lr")) e.lr = parse_real("lr", *v);
  if (const auto* v = get("adam_eps")) e.adam_eps = parse_real("adam_eps", *v);
  if (const auto* v = get("seed")) e.seed = parse_uint("seed", *v);
  if (const auto* v = get("aug_fraction")) e.aug_fraction = parse_real("aug_fraction", *v);
  if (const auto* v = get("freeze_encoder")) e.freeze_encoder = parse_bool("freeze_encoder", *v);

  if (const auto* v = get("encoder")) {
    e.encoder.kind = as_config_error("encoder", [&] { return parse_encoder_kind(*v); });
  }
  if (e.encoder.kind == EncoderKind::tiny_random) e.encoder = EncoderConfig::tiny(0);
  if (const auto* v = get("seq_len")) e.encoder.seq_len = parse_uint("seq_len", *v);
  if (const auto* v = get("hidden_dim")) e.encoder.hidden_dim = parse_uint("hidden_dim", *v);
  if (const auto* v = get("encoder_weights")) e.encoder.weights_path = *v;

  if (const auto* v = get("head_scale")) {
    const auto s = lower(*v);
    if (s == "full") e.head_config = HeadConfig::full();
    else if (s == "tiny") e.head_config = HeadConfig::tiny();
    else throw ConfigError("config key 'head_scale': expected full or tiny, got '" + *v + "'");
  }
  auto size_key = [&](const char* k, std::size_t& field) {
    if (const auto* v = get(k)) field = parse_uint(k, *v);
  };
  size_key("dense_units", e.head_config.dense_units);
  size_key("lstm_units", e.head_config.lstm_units);
  size_key("conv1_filters", e.head_config.conv1_filters);
  size_key("conv1_kernel", e.head_config.conv1_kernel);
  size_key("conv2_filters", e.head_config.conv2_filters);
  size_key("conv2_kernel", e.head_config.conv2_kernel);
  size_key("pool", e.head_config.pool);
  if (const auto* v = get("bilstm_readout")) {
    e.head_config.readout = as_config_error("bilstm_readout", [&] { return parse_readout(*v); });
  }

  if (const auto* v = get("train")) cfg.train_path = *v;
  if (const auto* v = get("val")) cfg.val_path = *v;
  if (const auto* v = get("augmented_train")) cfg.augmented_train_path = *v;
  if (const auto* v = get("vocab")) cfg.vocab_path = *v;
  if (const auto* v = get("out_dir")) cfg.out_dir = *v;
  if (const auto* v = get("label_mode")) {
    const auto s = lower(*v);
    if (s == "binary") cfg.label_mode = LabelMode::binary;
    else if (s == "scale") cfg.label_mode = LabelMode::scale;
    else throw ConfigError("config key 'label_mode': expected binary or scale, got '" + *v + "'");
  }
  e.validate();
  return cfg;
}

std::string format_run_config(const RunConfig& cfg) {
  const auto& e = cfg.experiment;
  const auto& h = e.head_config;
  std::ostringstream out;
  out.precision(17);
  out << "name = " << to_string(e.name) << "\n"
      << "augment = " << (e.augment ? "yes" : "no") << "\n"
      << "loss_weighting = " << (e.loss_weighting ? "yes" : "no") << "\n"
      << "beta = " << e.beta << "\n"
      << "subtask = " << to_string(e.subtask) << "\n"
      << "head = " << to_string(e.head) << "\n"
      << "epochs = " << e.epochs << "\n"
      << "batch_size = " << e.batch_size << "\n"
      << "lr = " << e.lr << "\n"
      << "adam_eps = " << e.adam_eps << "\n"
      << "seed = " << e.seed << "\n"
      << "encoder = " << to_string(e.encoder.kind) << "\n"
      << "seq_len = " << e.encoder.seq_len << "\n"
      << "hidden_dim = " << e.encoder.hidden_dim << "\n";
  if (!e.encoder.weights_path.empty()) out << "encoder_weights = " << e.encoder.weights_path << "\n";
  out << "dense_units = " << h.dense_units << "\n"
      << "lstm_units = " << h.lstm_units << "\n"
      << "conv1_filters = " << h.conv1_filters << "\n"
      << "conv1_kernel = " << h.conv1_kernel << "\n"
      << "conv2_filters = " << h.conv2_filters << "\n"
      << "conv2_kernel = " << h.conv2_kernel << "\n"
      << "pool = " << h.pool << "\n"
      << "bilstm_readout = " << to_string(h.readout) << "\n"
      << "freeze_encoder = " << (e.freeze_encoder ? "yes" : "no") << "\n"
      << "aug_fraction = " << e.aug_fraction << "\n"
      << "label_mode = " << (cfg.label_mode == LabelMode::binary ? "binary" : "scale") << "\n";
  if (!cfg.train_path.empty()) out << "train = " << cfg.train_path << "\n";
  if (!cfg.val_path.empty()) out << "val = " << cfg.val_path << "\n";
  if (!cfg.augmented_train_path.empty()) out << "augmented_train = " << cfg.augmented_train_path << "\n";
  if (!cfg.vocab_path.empty()) out << "vocab = " << cfg.vocab_path << "\n";
  if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << "\n";
  return out.str();
}

// ------------------------------------------------------------------- logging

std::string format_train_log(const TrainLog& log) {
  std::string out;
  for (const auto& r : log.epochs) {
    out += std::to_string(r.epoch) + "\t" + fmt("%.10f", r.train_loss) + "\t" +
           fmt("%.10f", r.val_metric) + "\n";
  }
  return out;
}

std::size_t select_best(std::span<const double> metrics) {
  if (metrics.empty()) throw DomainError("cannot select the best epoch of an empty log");
  std::size_t best = 0;
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    if (metrics[i] > metrics[best]) best = i;
  }
  return best + 1;
}

// ------------------------------------------------------------------ losses

std::vector<std::array<std::size_t, 2>> class_counts(const std::vector<Sample>& samples,
                                                     Subtask subtask) {
  const std::size_t heads = subtask == Subtask::a ? 1 : kNumCategories;
  std::vector<std::array<std::size_t, 2>> counts(heads, {0, 0});
  for (const auto& s : samples) {
    if (subtask == Subtask::a) {
      counts[0][static_cast<std::size_t>(s.binary_label)]++;
    } else {
      for (std::size_t c = 0; c < kNumCategories; ++c) {
        counts[c][static_cast<std::size_t>(s.category_labels[c])]++;
      }
    }
  }
  return counts;
}

std::vector<ClassWeights> experiment_class_weights(const ExperimentSpec& spec,
                                                   const std::vector<Sample>& train) {
  std::vector<ClassWeights> out;
  for (const auto& c : class_counts(train, spec.subtask)) {
    if (!spec.loss_weighting) {
      auto w = unit_weights(2);
      w.counts = {c[0], c[1]};
      out.push_back(w);
      continue;
    }
    const std::array<std::size_t, 2> clamped = {std::max<std::size_t>(c[0], 1),
                                                std::max<std::size_t>(c[1], 1)};
    auto w = compute_class_weights(clamped, spec.beta);
    w.counts = {c[0], c[1]};
    out.push_back(w);
  }
  return out;
}

double example_loss(const HeadOutput& out, const TokenizedExample& ex, Subtask subtask,
                    const std::vector<ClassWeights>& weights, std::vector<Logits>* grads) {
  const std::size_t heads = out.logits.size();
  if (weights.size() != heads) {
    throw ShapeError("have " + std::to_string(weights.size()) + " class weight sets for " +
                     std::to_string(heads) + " heads");
  }
  if (grads) grads->assign(heads, Logits{0.0, 0.0});
  double total = 0.0;
  const double scale = 1.0 / static_cast<double>(heads);
  for (std::size_t k = 0; k < heads; ++k) {
    const int y = subtask == Subtask::a ? ex.binary_label : ex.category_labels[k];
    const double w = weights[k][static_cast<std::size_t>(y)];
    total += weighted_ce_loss(out.logits[k], y, w);
    if (grads) {
      const auto g = weighted_ce_grad(out.logits[k], y, w);
      (*grads)[k] = {g[0] * scale, g[1] * scale};
    }
  }
  return total * scale;
}

double mean_loss(Model& model, const std::vector<TokenizedExample>& examples,
                 const std::vector<ClassWeights>& weights) {
  if (examples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& ex : examples) {
    const auto out = model.forward(ex.token_ids, ex.attention_mask);
    total += example_loss(out, ex, model.spec().subtask, weights, nullptr);
  }
  return total / static_cast<double>(examples.size());
}

// --------------------------------------------------------------- prediction

int argmax(const Logits& z) { return z[1] > z[0] ? 1 : 0; }

Predictions predict(Model& model, const std::vector<TokenizedExample>& examples) {
  Predictions p;
  p.subtask = model.spec().subtask;
  for (const auto& ex : examples) {
    const auto out = model.forward(ex.token_ids, ex.attention_mask);
    std::vector<int> row;
    for (const auto& z : out.logits) row.push_back(argmax(z));
    p.rows.push_back(std::move(row));
  }
  return p;
}

Predictions predict(Checkpoint& ckpt, const std::vector<Sample>& samples,
                    std::optional<Subtask> expected) {
  if (expected && *expected != ckpt.model.spec().subtask) {
    throw CompatibilityError("checkpoint was trained for subtask " +
                             to_string(ckpt.model.spec().subtask) + ", not " +
                             to_string(*expected));
  }
  const VocabTokenizer tok(ckpt.vocab);
  if (tok.vocab_size() != ckpt.model.spec().encoder.vocab_size) {
    throw CompatibilityError("checkpoint vocabulary does not match its encoder");
  }
  const auto layout = TokenLayout::for_seq_len(ckpt.model.spec().encoder.seq_len);
  return predict(ckpt.model, batch_tokenize(samples, tok, layout));
}

std::string format_predictions(const Predictions& p) {
  std::string out;
  for (const auto& row : p.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(row[i]);
    }
    out += '\n';
  }
  return out;
}

Predictions parse_predictions(std::string_view text, Subtask subtask) {
  Predictions p;
  p.subtask = subtask;
  const std::size_t arity = subtask == Subtask::a ? 1 : kNumCategories;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::vector<int> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      const auto field = trim(body.substr(start, comma == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : comma - start));
      if (field != "0" && field != "1") {
        throw FormatError("line " + std::to_string(line_no) + ": expected 0 or 1, got '" +
                          std::string(field) + "'");
      }
      row.push_back(field == "1");
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.size() != arity) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                        " value(s) for subtask " + to_string(subtask) + ", got " +
                        std::to_string(row.size()));
    }
    p.rows.push_back(std::move(row));
  }
  return p;
}

Predictions gold_labels(const std::vector<Sample>& samples, Subtask subtask) {
  Predictions p;
  p.subtask = subtask;
  for (const auto& s : samples) {
    if (subtask == Subtask::a) {
      p.rows.push_back({s.binary_label});
    } else {
      p.rows.emplace_back(s.category_labels.begin(), s.category_labels.end());
    }
  }
  return p;
}

double selection_metric(const Predictions& gold, const Predictions& pred) {
  if (gold.subtask != pred.subtask) throw CompatibilityError("gold/prediction subtask mismatch");
  if (gold.rows.size() != pred.rows.size()) {
    throw FormatError("gold has " + std::to_string(gold.rows.size()) + " rows, predictions " +
                      std::to_string(pred.rows.size()));
  }
  if (gold.subtask == Subtask::a) {
    std::vector<int> g, p;
    for (const auto& r : gold.rows) g.push_back(r.at(0));
    for (const auto& r : pred.rows) p.push_back(r.at(0));
    return binary_prf(g, p).f1;
  }
  std::vector<CategoryLabels> g(gold.rows.size()), p(pred.rows.size());
  for (std::size_t i = 0; i < gold.rows.size(); ++i) {
    for (std::size_t c = 0; c < kNumCategories; ++c) {
      g[i][c] = gold.rows[i].at(c);
      p[i][c] = pred.rows[i].at(c);
    }
  }
  return multi_label_report(g, p).macro_f1;
}

// ------------------------------------------------------------------ training

TrainLog run_experiment(const ExperimentSpec& spec, const ExperimentData& data,
                        const VocabTokenizer& tok, const std::string& out_dir,
                        const Translator* translator, std::ostream* progress) {
  spec.validate();
  if (data.val.samples.empty()) throw DomainError("validation partition is empty");
  if (data.train.samples.empty()) throw DomainError("training partition is empty");
  std::filesystem::create_directories(out_dir);

  TrainLog log;
  std::vector<Sample> train;
  if (!spec.augment) {
    train = data.train.samples;
  } else if (data.augmented_train) {
    SplitSpec provenance{ids_of(data.train.samples), ids_of(data.val.samples)};
    audit_train_provenance(*data.augmented_train, provenance);
    train = *data.augmented_train;
  } else if (translator) {
    AugmentationConfig acfg{spec.aug_fraction, stream_seed(spec.seed, SeedStream::augmentation),
                            true};
    auto aug = build_augmented_train_set(data.train, acfg, *translator);
    log.warnings = std::move(aug.warnings);
    train = std::move(aug.samples);
  } else {
    throw ConfigError("experiment " + to_string(spec.name) +
                      " needs an augmented train set or a translator");
  }
  check_no_leakage(data, train);
  log.train_size = train.size();
  log.augmented = static_cast<std::size_t>(std::count_if(
      train.begin(), train.end(), [](const Sample& s) { return source_par_id(s.par_id) != s.par_id; }));

  ModelSpec ms{spec.encoder, spec.head, spec.subtask, spec.head_config};
  ms.encoder.vocab_size = tok.vocab_size();
  Model model = build_model(ms, stream_seed(spec.seed, SeedStream::model_init));
  const auto layout = TokenLayout::for_seq_len(ms.encoder.seq_len);
  const auto train_ex = batch_tokenize(train, tok, layout);
  const auto val_ex = batch_tokenize(data.val.samples, tok, layout);
  const Predictions gold = gold_labels(data.val.samples, spec.subtask);

  log.class_weights = experiment_class_weights(spec, train);
  auto view = trainable_parameters(model, spec.freeze_encoder);
  Adam adam(view.params, AdamConfig{spec.lr, 0.9, 0.999, spec.adam_eps});
  Rng shuffle_rng(stream_seed(spec.seed, SeedStream::shuffle));
  log.checkpoint_path = (std::filesystem::path(out_dir) / "best.ckpt").string();

  std::vector<std::size_t> order(train_ex.size());
  std::vector<Logits> grads;
  std::vector<double> metrics;
  for (std::size_t epoch = 1; epoch <= spec.epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += spec.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + spec.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      double batch_total = 0.0;
      for (std::size_t j = start; j < end; ++j) {
        const auto& ex = train_ex[order[j]];
        const auto out = model.forward(ex.token_ids, ex.attention_mask);
        for (const auto& z : out.logits) {
          if (!std::isfinite(z[0]) || !std::isfinite(z[1])) {
            throw TrainingError("non-finite logits at epoch " + std::to_string(epoch) +
                                ", batch " + std::to_string(batch_no + 1));
          }
        }
        batch_total += example_loss(out, ex, spec.subtask, log.class_weights, &grads);
        for (auto& g : grads) {
          g[0] *= inv_batch;
          g[1] *= inv_batch;
        }
        model.backward(grads);
      }
      if (!std::isfinite(batch_total)) {
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no + 1));
      }
      epoch_loss += batch_total;
      adam.step();
    }
    const double train_loss = epoch_loss / static_cast<double>(train_ex.size());
    const double metric = selection_metric(gold, predict(model, val_ex));
    log.epochs.push_back({epoch, train_loss, metric});
    metrics.push_back(metric);
    if (select_best(metrics) == epoch) {
      save_checkpoint(log.checkpoint_path, model, tok.tokens());
    }
    if (progress) {
      *progress << "epoch " << epoch << "/" << spec.epochs << "  train_loss "
                << fmt("%.6f", train_loss) << "  val_" << (spec.subtask == Subtask::a ? "f1 " : "macro_f1 ")
                << fmt("%.4f", metric) << "\n";
    }
  }
  log.best_epoch = select_best(metrics);
  log.best_metric = metrics[log.best_epoch - 1];

  write_text((std::filesystem::path(out_dir) / "train_log.tsv").string(), format_train_log(log));
  std::string weights = "head\tbeta\tn_neg\tn_pos\tw_neg\tw_pos\n";
  for (std::size_t k = 0; k < log.class_weights.size(); ++k) {
    const auto& w = log.class_weights[k];
    const std::string head =
        spec.subtask == Subtask::a ? std::string("binary") : std::string(kCategoryCodes[k]);
    weights += head + "\t" + fmt("%.17g", w.beta) + "\t" + std::to_string(w.counts[0]) + "\t" +
               std::to_string(w.counts[1]) + "\t" + fmt("%.17g", w.weights[0]) + "\t" +
               fmt("%.17g", w.weights[1]) + "\n";
  }
  write_text((std::filesystem::path(out_dir) / "class_weights.tsv").string(), weights);
  return log;
}

}  // namespace pcl
