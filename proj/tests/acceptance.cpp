// Acceptance checks, one line per criterion:
//   acceptance [--criterion N]
// Exit status 0 when every selected criterion passes, 1 on any failure, 77
// when the only selected criterion was skipped (missing dataset).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "pcl/augment.hpp"
#include "pcl/balance.hpp"
#include "pcl/corpus.hpp"
#include "pcl/errors.hpp"
#include "pcl/metrics.hpp"
#include "pcl/model.hpp"
#include "pcl/tokenize.hpp"
#include "pcl/train.hpp"
#include "support.hpp"

using namespace pcl;

namespace {

// Pinned tolerances.
constexpr double kTableTol = 5e-5;
constexpr double kLimitTol = 1e-4;
constexpr double kGradTol = 1e-3;
constexpr double kLongFractionTol = 1e-3;
constexpr double kBudget1 = 1.0, kBudget3 = 1.0, kBudget4 = 5.0, kBudget5 = 30.0, kBudget7 = 60.0;

enum class Status { pass, fail, skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

std::string num(double v, const char* f = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentSpec tiny_experiment(HeadKind head, Subtask st) {
  ExperimentSpec e;
  e.head = head;
  e.subtask = st;
  e.encoder = EncoderConfig::tiny(0);
  e.head_config = HeadConfig::tiny();
  e.epochs = 5;
  e.lr = 1e-2;
  e.seed = 2024;
  return e;
}

ExperimentData toy_split(std::size_t train_n, std::size_t val_n) {
  const auto all = pcl::test::toy_corpus(train_n + val_n, 77);
  ExperimentData d;
  d.train.role = PartitionRole::train;
  d.val.role = PartitionRole::validation;
  for (std::size_t i = 0; i < all.size(); ++i) (i < train_n ? d.train : d.val).samples.push_back(all[i]);
  return d;
}

// ------------------------------------------------------------------ criteria

Outcome macro_f1_table() {
  const auto t0 = std::chrono::steady_clock::now();
  const double fnn[] = {0.5969, 0.4578, 0.3333, 0.2178, 0.3043, 0.536, 0.1875};
  const double base[] = {0.3535, 0, 0.1667, 0, 0, 0.2087, 0};
  const double m_fnn = macro_f1(fnn), m_base = macro_f1(base);
  const double d_fnn = std::abs(m_fnn - 0.3763), d_base = std::abs(m_base - 0.1041);
  const double t = seconds_since(t0);
  return check(d_fnn <= kTableTol && d_base <= kTableTol && t < kBudget1,
               "RB-FNN macro " + num(m_fnn, "%.10f") + " vs 0.3763 (|diff| " + num(d_fnn, "%.2e") +
                   "), baseline " + num(m_base, "%.10f") + " vs 0.1041 (|diff| " +
                   num(d_base, "%.2e") + "), tol " + num(kTableTol, "%.0e") + ", " +
                   num(t, "%.3f") + " s");
}

Outcome f1_table() {
  const double f1 = f1_from_pr(0.5357, 0.6625);
  const double d = std::abs(f1 - 0.5924);
  return check(d <= kTableTol, "F1(0.5357, 0.6625) = " + num(f1, "%.10f") + " vs 0.5924 (|diff| " +
                                   num(d, "%.2e") + ")");
}

Outcome loss_weights() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  const std::size_t counts[] = {1, 10, 993, 9476};
  for (double w : compute_class_weights(counts, 0.0).weights) ok = ok && w == 1.0;
  const bool unit = ok;
  double worst = 0.0;
  const auto lim = compute_class_weights(counts, 1.0 - 1e-8);
  for (std::size_t i = 0; i < 4; ++i) {
    worst = std::max(worst, std::abs(lim.weights[i] * static_cast<double>(counts[i]) - 1.0));
  }
  ok = ok && worst <= kLimitTol;
  Rng rng(31);
  std::size_t violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t c[] = {1 + rng.below(20000), 1 + rng.below(20000)};
    const auto w = compute_class_weights(c, rng.uniform(0.0, 0.99999));
    if ((c[0] >= c[1] && w.weights[0] > w.weights[1]) || (c[0] < c[1] && w.weights[0] < w.weights[1])) {
      ++violations;
    }
  }
  ok = ok && violations == 0;
  const double t = seconds_since(t0);
  return check(ok && t < kBudget3, std::string("beta=0 unit weights ") + (unit ? "yes" : "no") +
                                       ", max |w*n-1| " + num(worst, "%.2e") + " (tol " +
                                       num(kLimitTol, "%.0e") + "), monotonicity violations " +
                                       std::to_string(violations) + "/1000, " + num(t, "%.3f") + " s");
}

Outcome tokenization() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(41);
  const auto vocab = VocabTokenizer::build(pcl::test::toy_corpus(60, 5));
  std::size_t bad = 0, mono_bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = pcl::test::make_sample("r" + std::to_string(i), 0,
                                          pcl::test::random_words(rng, rng.below(300)),
                                          std::string(kKeywords[rng.below(kKeywords.size())]));
    const auto ex = tokenize_sample(s, vocab);
    bool ok = ex.token_ids.size() == 106 && ex.attention_mask.size() == 106 &&
              ex.token_ids[0] == vocab.cls_id();
    if (ok) {
      std::size_t last = 0;
      for (std::size_t k = 0; k < 106; ++k) {
        ok = ok && ex.attention_mask[k] == (ex.token_ids[k] == vocab.pad_id() ? 0 : 1);
        if (ex.attention_mask[k]) last = k;
      }
      ok = ok && ex.token_ids[last] == vocab.sep_id();
    }
    if (!ok) ++bad;

    auto longer = s;
    longer.text += " " + pcl::test::random_words(rng, 1 + rng.below(50));
    const auto ex2 = tokenize_sample(longer, vocab);
    const auto n = std::min<std::size_t>(vocab.encode(s.text).size(), 100);
    for (std::size_t k = 0; k < n; ++k) {
      if (ex.token_ids[5 + k] != ex2.token_ids[5 + k]) {
        ++mono_bad;
        break;
      }
    }
  }
  const double t = seconds_since(t0);
  return check(bad == 0 && mono_bad == 0 && t < kBudget4,
               "layout violations " + std::to_string(bad) + "/1000, truncation-monotonicity violations " +
                   std::to_string(mono_bad) + "/1000, " + num(t, "%.3f") + " s");
}

Outcome shape_matrix() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(51);
  std::size_t cases = 0, bad = 0;
  for (auto head : {HeadKind::fnn, HeadKind::bilstm, HeadKind::cnn, HeadKind::bls_cnn}) {
    for (auto st : {Subtask::a, Subtask::b}) {
      ModelSpec spec{EncoderConfig::tiny(50), head, st, HeadConfig::tiny()};
      Model m(spec, 3);
      for (std::size_t batch : {1u, 8u}) {
        ++cases;
        std::vector<int> ids, mask;
        for (std::size_t r = 0; r < batch * 30; ++r) {
          ids.push_back(static_cast<int>(rng.below(50)));
          mask.push_back(1);
        }
        const auto out = m.forward_batch(ids, mask);
        bool ok = out.size() == batch;
        for (const auto& o : out) {
          ok = ok && o.logits.size() == (st == Subtask::a ? 1u : 7u);
          for (const auto& z : o.logits) ok = ok && std::isfinite(z[0]) && std::isfinite(z[1]);
        }
        if (batch == 1) {
          std::vector<int> one(ids.begin(), ids.begin() + 30), mone(30, 1);
          ok = ok && m.trace(one, mone) == plan_shapes(spec);
        }
        if (!ok) ++bad;
      }
    }
  }
  // Valid-padding oracle: n - k + 1 per conv, floor(n / 2) per pool.
  auto chain = [](std::size_t h, std::size_t w, std::size_t k1, std::size_t k2, std::size_t f2) {
    const std::size_t h1 = (h - k1 + 1) / 2, w1 = (w - k1 + 1) / 2;
    return f2 * ((h1 - k2 + 1) / 2) * ((w1 - k2 + 1) / 2);
  };
  auto flatten_of = [](const ModelSpec& s) {
    for (const auto& l : plan_shapes(s))
      if (l.layer == "flatten") return numel(l.output);
    return std::size_t{0};
  };
  std::size_t oracle_bad = 0;
  const ModelSpec tiny_cnn{EncoderConfig::tiny(50), HeadKind::cnn, Subtask::a, HeadConfig::tiny()};
  const ModelSpec tiny_bls{EncoderConfig::tiny(50), HeadKind::bls_cnn, Subtask::a, HeadConfig::tiny()};
  ModelSpec full_cnn, full_bls;
  full_cnn.head = HeadKind::cnn;
  full_bls.head = HeadKind::bls_cnn;
  if (flatten_of(tiny_cnn) != chain(30, 16, 3, 3, 4)) ++oracle_bad;
  if (flatten_of(tiny_bls) != chain(30, 12, 3, 3, 4)) ++oracle_bad;
  if (flatten_of(full_cnn) != chain(106, 1024, 10, 5, 32) || flatten_of(full_cnn) != 176704) ++oracle_bad;
  if (flatten_of(full_bls) != chain(106, 106, 10, 5, 32) || flatten_of(full_bls) != 15488) ++oracle_bad;
  const double t = seconds_since(t0);
  return check(bad == 0 && oracle_bad == 0 && t < kBudget5,
               std::to_string(cases - bad) + "/" + std::to_string(cases) +
                   " head x subtask x batch cases with contracted arity, shape-oracle mismatches " +
                   std::to_string(oracle_bad) + ", " + num(t, "%.3f") + " s");
}

Outcome gradient_check() {
  double worst = 0.0;
  std::size_t checked = 0;
  for (auto head : {HeadKind::fnn, HeadKind::bls_cnn}) {
    ModelSpec spec{EncoderConfig::tiny(50), head, Subtask::b, HeadConfig::tiny()};
    Model m(spec, 61);
    Rng rng(62);
    // Move zero biases off the ReLU kink before differencing.
    for (Param* p : m.parameters()) {
      if (p->name.find("bias") == std::string::npos) continue;
      for (auto& v : p->value.span()) v += rng.uniform(-0.1, 0.1);
    }
    std::vector<TokenizedExample> batch(4);
    for (auto& ex : batch) {
      for (std::size_t k = 0; k < 30; ++k) {
        const bool on = k < 20;
        ex.token_ids.push_back(on ? static_cast<int>(rng.below(50)) : 1);
        ex.attention_mask.push_back(on ? 1 : 0);
      }
      ex.binary_label = static_cast<int>(rng.below(2));
      for (auto& c : ex.category_labels) c = static_cast<int>(rng.below(2));
    }
    const std::size_t counts[] = {9, 3};
    const std::vector<ClassWeights> w(7, compute_class_weights(counts, 0.9));
    m.zero_grad();
    for (const auto& ex : batch) {
      std::vector<Logits> g;
      example_loss(m.forward(ex.token_ids, ex.attention_mask), ex, Subtask::b, w, &g);
      for (auto& z : g) z = {z[0] / 4.0, z[1] / 4.0};
      m.backward(g);
    }
    auto params = m.parameters();
    std::size_t done = 0;
    for (int attempt = 0; done < 10 && attempt < 500; ++attempt) {
      Param* p = params[rng.below(params.size())];
      const std::size_t i = rng.below(p->value.size());
      const double analytic = p->grad[i], orig = p->value[i], h = 1e-5;
      p->value[i] = orig + h;
      const double up = mean_loss(m, batch, w);
      p->value[i] = orig - h;
      const double down = mean_loss(m, batch, w);
      p->value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      if (std::abs(analytic) < 1e-7 && std::abs(numeric) < 1e-7) continue;
      worst = std::max(worst, std::abs(analytic - numeric) / std::max(std::abs(analytic), std::abs(numeric)));
      ++done;
    }
    checked += done;
  }
  return check(checked == 20 && worst < kGradTol,
               std::to_string(checked) + " parameters (FNN, BLS-CNN), max relative error " +
                   num(worst, "%.2e") + " (tol " + num(kGradTol, "%.0e") + ")");
}

Outcome overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  pcl::test::TempDir dir;
  const auto data = toy_split(32, 8);
  const auto tok = VocabTokenizer::build(data.train.samples);
  const auto log = run_experiment(tiny_experiment(HeadKind::fnn, Subtask::a), data, tok, dir.file("run"));
  std::vector<double> metrics;
  for (const auto& r : log.epochs) metrics.push_back(r.val_metric);
  std::size_t brute = 1;
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (metrics[i] > metrics[brute - 1]) brute = i + 1;
  const double first = log.epochs.front().train_loss, last = log.epochs.back().train_loss;
  const double t = seconds_since(t0);
  return check(log.epochs.size() == 5 && last < first && log.best_epoch == brute && t < kBudget7,
               "train loss epoch 1 " + num(first, "%.6f") + " -> epoch 5 " + num(last, "%.6f") +
                   ", best epoch " + std::to_string(log.best_epoch) + " (argmax " +
                   std::to_string(brute) + "), " + num(t, "%.3f") + " s");
}

Outcome augmentation() {
  std::vector<Sample> pool;
  for (int i = 0; i < 993; ++i) pool.push_back(pcl::test::make_sample("p" + std::to_string(i), 1, "text " + std::to_string(i)));
  for (int i = 0; i < 500; ++i) pool.push_back(pcl::test::make_sample("n" + std::to_string(i), 0));
  const auto selected = select_for_augmentation(pool, {0.30, 8, true});
  const auto bt = back_translate(selected, IdentityTranslator{});
  bool preserved = bt.samples.size() == selected.size();
  for (std::size_t i = 0; preserved && i < selected.size(); ++i) {
    preserved = bt.samples[i].text == selected[i].text &&
                bt.samples[i].binary_label == selected[i].binary_label &&
                bt.samples[i].category_labels == selected[i].category_labels;
  }
  bool guard = false;
  try {
    build_augmented_train_set(Partition{PartitionRole::validation, pool}, {0.30, 8, true}, IdentityTranslator{});
  } catch (const LeakageError&) {
    guard = true;
  }
  return check(selected.size() == 297 && preserved && guard,
               "selected " + std::to_string(selected.size()) + " of 993 (expect 297), identity copies " +
                   (preserved ? "preserved" : "changed") + ", validation guard " +
                   (guard ? "tripped" : "silent"));
}

Outcome determinism() {
  pcl::test::TempDir dir;
  const auto data = toy_split(32, 8);
  const auto tok = VocabTokenizer::build(data.train.samples);
  bool ok = true;
  for (auto head : {HeadKind::fnn, HeadKind::bls_cnn}) {
    const auto spec = tiny_experiment(head, Subtask::b);
    std::string logs[2], preds[2];
    for (int run = 0; run < 2; ++run) {
      const auto out = dir.file("run" + std::to_string(run));
      const auto log = run_experiment(spec, data, tok, out);
      logs[run] = pcl::test::slurp(out + "/train_log.tsv");
      auto ck = load_checkpoint(log.checkpoint_path);
      pcl::test::spit(out + "/pred.txt", format_predictions(predict(ck, data.val.samples)));
      preds[run] = pcl::test::slurp(out + "/pred.txt");
    }
    ok = ok && !logs[0].empty() && logs[0] == logs[1] && preds[0] == preds[1];
  }
  return check(ok, std::string("same-seed TrainLogs and prediction files ") +
                       (ok ? "byte-identical" : "differ") + " (FNN, BLS-CNN, subtask B)");
}

Outcome dataset_stats() {
  const char* dir = std::getenv("PCL_DATA_DIR");
  if (!dir) return {Status::skip, "PCL_DATA_DIR not set; real dataset unavailable"};
  const auto path = std::filesystem::path(dir) / "dontpatronizeme_pcl.tsv";
  if (!std::filesystem::exists(path)) return {Status::skip, path.string() + " not found"};
  const auto st = compute_stats(load_corpus(path.string(), LabelMode::scale));
  const double d = std::abs(st.long_positive_fraction - 0.1943);
  return check(st.total == 10469 && st.positives == 993 && d <= kLongFractionTol,
               std::to_string(st.total) + " samples / " + std::to_string(st.positives) +
                   " positives, long-positive fraction " + num(st.long_positive_fraction, "%.4f") +
                   " vs 0.1943 (tol " + num(kLongFractionTol, "%.0e") + ")");
}

struct Criterion {
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"metric oracle, category table macro-F1", macro_f1_table},
      {"metric oracle, P/R/F1 consistency", f1_table},
      {"loss-weight properties", loss_weights},
      {"tokenization invariant", tokenization},
      {"shape matrix", shape_matrix},
      {"gradient check", gradient_check},
      {"overfit sanity", overfit},
      {"augmentation counting", augmentation},
      {"determinism", determinism},
      {"dataset statistics", dataset_stats},
  };
  std::size_t only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--criterion" && i + 1 < argc) {
      only = std::strtoul(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  if (only > criteria.size()) {
    std::fprintf(stderr, "no criterion %zu\n", only);
    return 2;
  }
  int failures = 0, skips = 0, ran = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && only != i + 1) continue;
    ++ran;
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {Status::fail, std::string("exception: ") + e.what()};
    }
    const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
    std::printf("criterion %zu %s: %s | %s\n", i + 1, tag, criteria[i].title, o.detail.c_str());
    if (o.status == Status::fail) ++failures;
    if (o.status == Status::skip) ++skips;
  }
  std::fflush(stdout);
  if (failures) return 1;
  return skips == ran ? 77 : 0;
}
