#include "pcl/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "pcl/errors.hpp"

namespace pcl {

BinaryCounts count_binary(std::span<const int> gold, std::span<const int> pred) {
  if (gold.size() != pred.size()) {
    throw DomainError("gold has " + std::to_string(gold.size()) + " labels, predictions " +
                      std::to_string(pred.size()));
  }
  BinaryCounts c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] != 0, p = pred[i] != 0;
    if (g && p) ++c.tp;
    else if (!g && p) ++c.fp;
    else if (g && !p) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double f1_from_pr(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Prf prf_from_counts(const BinaryCounts& c) {
  Prf r;
  r.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = f1_from_pr(r.precision, r.recall);
  return r;
}

Prf binary_prf(std::span<const int> gold, std::span<const int> pred) {
  if (gold.empty() && pred.empty()) throw DomainError("cannot score an empty prediction set");
  return prf_from_counts(count_binary(gold, pred));
}

double macro_f1(std::span<const double> f1s) {
  if (f1s.empty()) return 0.0;
  return std::accumulate(f1s.begin(), f1s.end(), 0.0) / static_cast<double>(f1s.size());
}

MultiLabelReport multi_label_report(const std::vector<CategoryLabels>& gold,
                                    const std::vector<CategoryLabels>& pred) {
  if (gold.size() != pred.size()) {
    throw DomainError("gold has " + std::to_string(gold.size()) + " rows, predictions " +
                      std::to_string(pred.size()));
  }
  if (gold.empty()) throw DomainError("cannot score an empty prediction set");
  MultiLabelReport report;
  std::array<double, kNumCategories> f1s{};
  std::vector<int> g(gold.size()), p(gold.size());
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    for (std::size_t i = 0; i < gold.size(); ++i) {
      g[i] = gold[i][c];
      p[i] = pred[i][c];
    }
    report.per_category[c] = binary_prf(g, p);
    f1s[c] = report.per_category[c].f1;
  }
  report.macro_f1 = macro_f1(f1s);
  return report;
}

std::string format_4dp(double v) {
  if (!std::isfinite(v)) v = 0.0;
  // Half-up on the decimal value; the small nudge absorbs binary
  // representation error such as 0.59245 stored as 0.592449999...
  const double scaled = std::floor(v * 10000.0 + 0.5 + 1e-9);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", scaled / 10000.0);
  return buf;
}

std::string render_report(const Prf& r, ReportFormat fmt) {
  if (fmt == ReportFormat::tsv) {
    return "F1\tP\tR\n" + format_4dp(r.f1) + "\t" + format_4dp(r.precision) + "\t" +
           format_4dp(r.recall) + "\n";
  }
  std::string out = "F1 score  Precision  Recall\n";
  out += format_4dp(r.f1) + "    " + format_4dp(r.precision) + "     " + format_4dp(r.recall) + "\n";
  return out;
}

std::string render_report(const MultiLabelReport& r, ReportFormat fmt) {
  const char* sep = fmt == ReportFormat::tsv ? "\t" : "  ";
  std::string out = fmt == ReportFormat::tsv ? "metric" : "          ";
  out += sep;
  out += "Macro F1";
  for (auto code : kCategoryCodes) {
    out += sep;
    out += std::string(code) + " F1";
  }
  out += "\n";
  auto row = [&](const std::string& label, auto getter, bool with_macro) {
    std::string line = label;
    if (fmt == ReportFormat::text_table) line.resize(10, ' ');
    line += sep;
    line += with_macro ? format_4dp(r.macro_f1) : std::string(fmt == ReportFormat::tsv ? "" : "      ");
    for (const auto& prf : r.per_category) {
      line += sep;
      line += format_4dp(getter(prf));
    }
    return line + "\n";
  };
  out += row("F1", [](const Prf& p) { return p.f1; }, true);
  out += row("Precision", [](const Prf& p) { return p.precision; }, false);
  out += row("Recall", [](const Prf& p) { return p.recall; }, false);
  return out;
}

}  // namespace pcl
