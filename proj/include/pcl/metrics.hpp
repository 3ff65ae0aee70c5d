#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pcl/corpus.hpp"

namespace pcl {

struct BinaryCounts {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

BinaryCounts count_binary(std::span<const int> gold, std::span<const int> pred);

// 0/0 is taken as 0 for precision, recall and F1.
Prf prf_from_counts(const BinaryCounts& c);
double f1_from_pr(double precision, double recall);

// Positive-class scores. Throws DomainError on length mismatch or empty input.
Prf binary_prf(std::span<const int> gold, std::span<const int> pred);

struct MultiLabelReport {
  std::array<Prf, kNumCategories> per_category{};
  double macro_f1 = 0.0;
};

double macro_f1(std::span<const double> f1s);

// Column-wise binary_prf over 7-bit label vectors.
MultiLabelReport multi_label_report(const std::vector<CategoryLabels>& gold,
                                    const std::vector<CategoryLabels>& pred);

enum class ReportFormat { text_table, tsv };

// Values rounded half-up to 4 decimals.
std::string render_report(const Prf& report, ReportFormat fmt);
std::string render_report(const MultiLabelReport& report, ReportFormat fmt);
std::string format_4dp(double v);

}  // namespace pcl
