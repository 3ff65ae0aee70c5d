#include "pcl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pcl/augment.hpp"
#include "pcl/checkpoint.hpp"
#include "pcl/corpus.hpp"
#include "pcl/digest.hpp"
#include "pcl/metrics.hpp"
#include "pcl/tokenize.hpp"
#include "pcl/train.hpp"

namespace pcl {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Record of one command invocation: what went in, what came out.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::string resolved_config;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string started_at;

  void write(const fs::path& dir) const {
    json j;
    j["command"] = command;
    j["config_path"] = config_path;
    j["resolved_config"] = resolved_config;
    auto files = [](const std::vector<std::string>& paths) {
      json arr = json::array();
      for (const auto& p : paths) arr.push_back({{"path", p}, {"sha256", sha256_file(p)}});
      return arr;
    };
    j["inputs"] = files(inputs);
    j["outputs"] = files(outputs);
    j["started_at"] = started_at;
    j["finished_at"] = utc_now();
    write_text((dir / "manifest.json").string(), j.dump(2) + "\n");
  }
};

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;  // key=value overrides
};

std::map<std::string, std::string> overrides_from(const Globals& g) {
  std::map<std::string, std::string> kv;
  for (const auto& s : g.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (g.seed) kv["seed"] = std::to_string(*g.seed);
  if (!g.out_dir.empty()) kv["out_dir"] = g.out_dir;
  return kv;
}

RunConfig load_config(const Globals& g) {
  const std::string text = g.config.empty() ? std::string() : read_text(g.config);
  return parse_run_config(text, overrides_from(g));
}

std::string out_dir_or(const RunConfig& cfg, const std::string& fallback) {
  return cfg.out_dir.empty() ? fallback : cfg.out_dir;
}

// ------------------------------------------------------------------ prepare

struct PrepareArgs {
  std::string corpus, categories, train_ids, val_ids;
  std::string label_mode;
  double train_fraction = 0.8;
  std::size_t min_count = 1;
};

int cmd_prepare(const Globals& g, const PrepareArgs& a, std::ostream& out) {
  RunManifest m{"prepare", g.config, "", {}, {}, utc_now()};
  RunConfig cfg = load_config(g);
  LabelMode mode = cfg.label_mode;
  if (!a.label_mode.empty()) {
    if (a.label_mode == "binary") mode = LabelMode::binary;
    else if (a.label_mode == "scale") mode = LabelMode::scale;
    else throw ConfigError("--label-mode must be binary or scale");
  }
  auto samples = load_corpus(a.corpus, mode);
  m.inputs.push_back(a.corpus);
  if (!a.categories.empty()) {
    attach_categories(samples, load_category_spans(a.categories));
    m.inputs.push_back(a.categories);
  }
  SplitSpec split;
  if (!a.train_ids.empty() || !a.val_ids.empty()) {
    if (a.train_ids.empty() || a.val_ids.empty()) {
      throw ConfigError("--train-ids and --val-ids must be given together");
    }
    split = load_split(a.train_ids, a.val_ids);
    m.inputs.push_back(a.train_ids);
    m.inputs.push_back(a.val_ids);
  } else {
    split = make_random_split(samples, a.train_fraction,
                              stream_seed(cfg.experiment.seed, SeedStream::split));
  }
  const auto parts = apply_split(samples, split);

  const fs::path dir = out_dir_or(cfg, "prepared");
  fs::create_directories(dir);
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto p = (dir / name).string();
    write_text(p, content);
    m.outputs.push_back(p);
  };
  emit("train.tsv", format_corpus(parts.train.samples));
  emit("val.tsv", format_corpus(parts.val.samples));
  std::string ids;
  for (const auto& s : parts.train.samples) ids += s.par_id + "\n";
  emit("train_ids.txt", ids);
  ids.clear();
  for (const auto& s : parts.val.samples) ids += s.par_id + "\n";
  emit("val_ids.txt", ids);
  const auto stats = compute_stats(samples);
  emit("stats.txt", render_stats(stats));
  const auto vocab = VocabTokenizer::build(parts.train.samples, a.min_count);
  vocab.save((dir / "vocab.txt").string());
  m.outputs.push_back((dir / "vocab.txt").string());
  m.resolved_config = format_run_config(cfg);
  m.write(dir);

  out << "loaded " << stats.total << " samples (" << stats.positives << " positive); train "
      << parts.train.samples.size() << ", val " << parts.val.samples.size() << "; vocabulary "
      << vocab.vocab_size() << " tokens\n"
      << "wrote " << dir.string() << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------ augment

struct AugmentArgs {
  std::string prepared;
  std::string translator = "identity";
  std::string endpoint;
  std::optional<double> fraction;
  double timeout = 30.0;
  int retries = 2;
  unsigned threads = 1;
};

int cmd_augment(const Globals& g, const AugmentArgs& a, std::ostream& out, std::ostream& err) {
  RunManifest m{"augment", g.config, "", {}, {}, utc_now()};
  RunConfig cfg = load_config(g);
  const fs::path in_dir = a.prepared;
  const auto train_path = (in_dir / "train.tsv").string();
  const auto val_path = (in_dir / "val.tsv").string();
  Partition train{PartitionRole::train, load_corpus(train_path, LabelMode::binary)};
  const auto val = load_corpus(val_path, LabelMode::binary);
  m.inputs = {train_path, val_path};

  std::unique_ptr<Translator> tr;
  if (a.translator == "identity") {
    tr = std::make_unique<IdentityTranslator>();
  } else if (a.translator == "http") {
    std::string endpoint = a.endpoint;
    if (endpoint.empty()) {
      if (const char* env = std::getenv(kTranslatorEndpointEnv)) endpoint = env;
    }
    if (endpoint.empty()) {
      throw ConfigError(std::string("http translator needs --endpoint or ") +
                        kTranslatorEndpointEnv);
    }
    tr = std::make_unique<HttpTranslator>(
        HttpTranslatorConfig{endpoint, "en", "fr", a.timeout, a.retries});
  } else {
    throw ConfigError("--translator must be identity or http");
  }

  AugmentationConfig acfg{a.fraction.value_or(cfg.experiment.aug_fraction),
                          stream_seed(cfg.experiment.seed, SeedStream::augmentation), true};
  const auto result = build_augmented_train_set(train, acfg, *tr, a.threads);
  SplitSpec provenance;
  for (const auto& s : train.samples) provenance.train_ids.insert(s.par_id);
  for (const auto& s : val) provenance.val_ids.insert(s.par_id);
  audit_train_provenance(result.samples, provenance);

  const fs::path dir = out_dir_or(cfg, a.prepared);
  fs::create_directories(dir);
  const auto aug_path = (dir / "train_aug.tsv").string();
  write_corpus(aug_path, result.samples);
  std::string log = "# fraction " + std::to_string(acfg.fraction) + ", selected " +
                    std::to_string(result.selected_ids.size()) + ", added " +
                    std::to_string(result.samples.size() - train.samples.size()) + "\n";
  for (const auto& id : result.selected_ids) log += id + "\n";
  for (const auto& w : result.warnings) log += "# warning: " + w + "\n";
  const auto log_path = (dir / "selection.log").string();
  write_text(log_path, log);
  m.outputs = {aug_path, log_path};
  cfg.experiment.aug_fraction = acfg.fraction;
  m.resolved_config = format_run_config(cfg);
  m.write(dir);

  for (const auto& w : result.warnings) err << "warning: " << w << "\n";
  out << "selected " << result.selected_ids.size() << " of the positive training samples; wrote "
      << result.samples.size() << " rows to " << aug_path << "\n";
  return kExitOk;
}

// -------------------------------------------------------------------- train

// Trains one experiment into `dir` and returns the files it produced.
std::vector<std::string> train_one(const ExperimentSpec& spec, const ExperimentData& data,
                                   const VocabTokenizer& tok, const fs::path& dir,
                                   std::ostream& out) {
  const auto log = run_experiment(spec, data, tok, dir.string(), nullptr, &out);
  for (const auto& w : log.warnings) out << "warning: " << w << "\n";
  auto ckpt = load_checkpoint(log.checkpoint_path);
  const auto val_pred = predict(ckpt, data.val.samples);
  const auto pred_path = (dir / "val_predictions.txt").string();
  write_text(pred_path, format_predictions(val_pred));
  out << "best epoch " << log.best_epoch << " with validation "
      << (spec.subtask == Subtask::a ? "F1 " : "macro-F1 ") << format_4dp(log.best_metric)
      << "; checkpoint " << log.checkpoint_path << "\n";
  return {log.checkpoint_path, (dir / "train_log.tsv").string(),
          (dir / "class_weights.tsv").string(), pred_path};
}

int cmd_train(const Globals& g, bool grid, std::ostream& out) {
  RunManifest m{"train", g.config, "", {}, {}, utc_now()};
  const RunConfig cfg = load_config(g);
  if (cfg.train_path.empty() || cfg.val_path.empty()) {
    throw ConfigError("config must set 'train' and 'val'");
  }
  const auto specs = grid ? experiment_grid(cfg.experiment)
                          : std::vector<ExperimentSpec>{cfg.experiment};
  const bool any_aug = std::any_of(specs.begin(), specs.end(),
                                   [](const ExperimentSpec& e) { return e.augment; });
  ExperimentData data;
  data.train = Partition{PartitionRole::train, load_corpus(cfg.train_path, cfg.label_mode)};
  data.val = Partition{PartitionRole::validation, load_corpus(cfg.val_path, cfg.label_mode)};
  if (!g.config.empty()) m.inputs.push_back(g.config);
  m.inputs.push_back(cfg.train_path);
  m.inputs.push_back(cfg.val_path);
  if (any_aug) {
    if (cfg.augmented_train_path.empty()) {
      throw ConfigError("config key 'augmented_train' is required for experiments with "
                        "augmentation (run `pcl augment` first)");
    }
    data.augmented_train = load_corpus(cfg.augmented_train_path, cfg.label_mode);
    m.inputs.push_back(cfg.augmented_train_path);
  }
  const VocabTokenizer tok = cfg.vocab_path.empty()
                                 ? VocabTokenizer::build(data.train.samples)
                                 : VocabTokenizer::load(cfg.vocab_path);
  if (!cfg.vocab_path.empty()) m.inputs.push_back(cfg.vocab_path);
  if (!cfg.experiment.encoder.weights_path.empty()) {
    m.inputs.push_back(cfg.experiment.encoder.weights_path);
  }

  const fs::path dir = out_dir_or(cfg, "run");
  for (const auto& spec : specs) {
    const fs::path run_dir = grid ? dir / run_label(spec) : dir;
    if (grid) out << "== " << to_string(spec.name) << " / " << to_string(spec.head) << "\n";
    const auto files = train_one(spec, data, tok, run_dir, out);
    m.outputs.insert(m.outputs.end(), files.begin(), files.end());
  }
  m.resolved_config = format_run_config(cfg);
  m.write(dir);
  return kExitOk;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string gold, pred, subtask, format = "text", report;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Subtask st = parse_subtask(a.subtask);
  const auto gold = parse_predictions(read_text(a.gold), st);
  const auto pred = parse_predictions(read_text(a.pred), st);
  if (gold.rows.size() != pred.rows.size()) {
    throw FormatError("gold has " + std::to_string(gold.rows.size()) + " rows, predictions " +
                      std::to_string(pred.rows.size()));
  }
  const ReportFormat fmt = a.format == "tsv" ? ReportFormat::tsv : ReportFormat::text_table;
  if (a.format != "tsv" && a.format != "text") throw ConfigError("--format must be text or tsv");
  std::string text;
  if (st == Subtask::a) {
    std::vector<int> g, p;
    for (const auto& r : gold.rows) g.push_back(r[0]);
    for (const auto& r : pred.rows) p.push_back(r[0]);
    text = render_report(binary_prf(g, p), fmt);
  } else {
    std::vector<CategoryLabels> g(gold.rows.size()), p(pred.rows.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::copy(gold.rows[i].begin(), gold.rows[i].end(), g[i].begin());
      std::copy(pred.rows[i].begin(), pred.rows[i].end(), p[i].begin());
    }
    text = render_report(multi_label_report(g, p), fmt);
  }
  if (!a.report.empty()) write_text(a.report, text);
  out << text;
  return kExitOk;
}

// ------------------------------------------------------------------ predict

struct PredictArgs {
  std::string checkpoint, input, out, subtask;
};

int cmd_predict(const Globals& g, const PredictArgs& a, std::ostream& out) {
  RunManifest m{"predict", g.config, "", {a.checkpoint, a.input}, {}, utc_now()};
  auto ckpt = load_checkpoint(a.checkpoint);
  const auto samples = load_corpus(a.input, LabelMode::none);
  std::optional<Subtask> expected;
  if (!a.subtask.empty()) expected = parse_subtask(a.subtask);
  const auto preds = predict(ckpt, samples, expected);
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_text(a.out, format_predictions(preds));
  m.outputs = {a.out};
  m.resolved_config = spec_to_json(ckpt.model.spec());
  if (!g.out_dir.empty()) {
    fs::create_directories(g.out_dir);
    m.write(g.out_dir);
  }
  out << "wrote " << preds.rows.size() << " prediction(s) for subtask "
      << to_string(ckpt.model.spec().subtask) << " to " << a.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Patronizing-language detection pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run config file (key = value lines)");
  app.add_option("--seed", g.seed, "Seed for every random stream (overrides config)");
  app.add_option("--out-dir", g.out_dir, "Output directory (overrides config)");
  app.add_option("--set", g.sets, "Override a config key: --set key=value (repeatable)");

  PrepareArgs pa;
  auto* prepare = app.add_subcommand("prepare", "Validate, split and summarise the corpus");
  prepare->add_option("--corpus", pa.corpus, "Paragraph TSV")->required();
  prepare->add_option("--categories", pa.categories, "Category span TSV (subtask B)");
  prepare->add_option("--train-ids", pa.train_ids, "Training par_ids, one per line");
  prepare->add_option("--val-ids", pa.val_ids, "Validation par_ids, one per line");
  prepare->add_option("--label-mode", pa.label_mode, "binary or scale (0-4, positive >= 2)");
  prepare->add_option("--train-fraction", pa.train_fraction,
                      "Random split fraction when no id lists are given");
  prepare->add_option("--min-count", pa.min_count, "Minimum word count for the vocabulary");

  AugmentArgs aa;
  auto* augment = app.add_subcommand("augment", "Back-translate a sample of training positives");
  augment->add_option("--prepared", aa.prepared, "Directory written by prepare")->required();
  augment->add_option("--translator", aa.translator, "identity or http");
  augment->add_option("--endpoint", aa.endpoint, "Translation service base URL");
  augment->add_option("--fraction", aa.fraction, "Fraction of positives to back-translate");
  augment->add_option("--timeout", aa.timeout, "Per-request timeout in seconds");
  augment->add_option("--retries", aa.retries, "Retries per request");
  augment->add_option("--threads", aa.threads, "Concurrent translation requests");

  bool grid = false;
  auto* train = app.add_subcommand("train", "Train one experiment and keep the best checkpoint");
  train->add_flag("--grid", grid, "Run every experiment x head combination into subdirectories");

  EvaluateArgs ea;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
  evaluate->add_option("--gold", ea.gold, "Gold labels in prediction format")->required();
  evaluate->add_option("--pred", ea.pred, "Predictions")->required();
  evaluate->add_option("--subtask", ea.subtask, "A or B")->required();
  evaluate->add_option("--format", ea.format, "text or tsv");
  evaluate->add_option("--report", ea.report, "Also write the report to this file");

  PredictArgs pr;
  auto* predict_cmd = app.add_subcommand("predict", "Write submission-format predictions");
  predict_cmd->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--input", pr.input, "Paragraph TSV (labels optional)")->required();
  predict_cmd->add_option("--out", pr.out, "Prediction file")->required();
  predict_cmd->add_option("--subtask", pr.subtask, "Expected subtask of the checkpoint");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  try {
    if (*prepare) return cmd_prepare(g, pa, out);
    if (*augment) return cmd_augment(g, aa, out, err);
    if (*train) return cmd_train(g, grid, out);
    if (*evaluate) return cmd_evaluate(ea, out);
    if (*predict_cmd) return cmd_predict(g, pr, out);
  } catch (const TranslatorUnavailable& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kExitFormat;
  } catch (const CompatibilityError& e) {
    err << "compatibility error: " << e.what() << "\n";
    return kExitCompatibility;
  } catch (const TrainingError& e) {
    err << "training aborted: " << e.what() << "\n";
    return kExitFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace pcl
