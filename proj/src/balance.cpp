#include "pcl/balance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcl/errors.hpp"

namespace pcl {

ClassWeights compute_class_weights(std::span<const std::size_t> counts, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) {
    throw DomainError("beta must lie in [0,1), got " + std::to_string(beta));
  }
  ClassWeights cw;
  cw.beta = beta;
  cw.counts.assign(counts.begin(), counts.end());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) {
      throw DomainError("class " + std::to_string(i) + " has zero samples");
    }
    if (beta == 0.0) {
      cw.weights.push_back(1.0);
      continue;
    }
    // 1 - beta^n without cancellation when beta is close to 1; beta - 1 is
    // exact for beta >= 0.5.
    const double log_beta = beta >= 0.5 ? std::log1p(beta - 1.0) : std::log(beta);
    const double denom = -std::expm1(static_cast<double>(counts[i]) * log_beta);
    cw.weights.push_back((1.0 - beta) / denom);
  }
  return cw;
}

ClassWeights unit_weights(std::size_t n_classes) {
  ClassWeights cw;
  cw.beta = 0.0;
  cw.counts.assign(n_classes, 0);
  cw.weights.assign(n_classes, 1.0);
  return cw;
}

double weighted_ce_loss(std::span<const double> logits, int true_class, double weight) {
  if (logits.empty()) throw DomainError("empty logits");
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= logits.size()) {
    throw DomainError("true class " + std::to_string(true_class) + " out of range");
  }
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("non-finite logit");
  }
  const double zmax = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - zmax);
  const double nll = zmax + std::log(sum) - logits[static_cast<std::size_t>(true_class)];
  return weight * std::max(0.0, nll);
}

Logits weighted_ce_grad(const Logits& z, int true_class, double weight) {
  const double zmax = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - zmax);
  const double e1 = std::exp(z[1] - zmax);
  const double s = e0 + e1;
  Logits g = {e0 / s, e1 / s};
  g[static_cast<std::size_t>(true_class)] -= 1.0;
  g[0] *= weight;
  g[1] *= weight;
  return g;
}

double batch_loss(std::span<const Logits> logit_rows, std::span<const int> true_classes,
                  const ClassWeights& weights) {
  if (logit_rows.size() != true_classes.size()) {
    throw DomainError("batch_loss: " + std::to_string(logit_rows.size()) + " logit rows vs " +
                      std::to_string(true_classes.size()) + " labels");
  }
  if (logit_rows.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < logit_rows.size(); ++i) {
    const int y = true_classes[i];
    total += weighted_ce_loss(logit_rows[i], y, weights[static_cast<std::size_t>(y)]);
  }
  return total / static_cast<double>(logit_rows.size());
}

}  // namespace pcl
