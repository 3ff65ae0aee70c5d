#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace pcl {

using Logits = std::array<double, 2>;

inline constexpr double kDefaultBeta = 0.9999;

// Class-balanced weights w_i = (1 - beta) / (1 - beta^n_i), the inverse of
// the effective number of samples of class i.
struct ClassWeights {
  double beta = 0.0;
  std::vector<std::size_t> counts;
  std::vector<double> weights;

  double operator[](std::size_t cls) const { return weights.at(cls); }
};

// Requires 0 <= beta < 1 and every count >= 1 (DomainError otherwise).
ClassWeights compute_class_weights(std::span<const std::size_t> counts, double beta);

// All weights 1; what an unweighted run uses.
ClassWeights unit_weights(std::size_t n_classes);

// weight * -log softmax(z)[true_class], evaluated in log-sum-exp form.
double weighted_ce_loss(std::span<const double> logits, int true_class, double weight);
inline double weighted_ce_loss(const Logits& z, int true_class, double weight) {
  return weighted_ce_loss(std::span<const double>(z), true_class, weight);
}

// d loss / d z = weight * (softmax(z) - onehot(true_class)).
Logits weighted_ce_grad(const Logits& z, int true_class, double weight);

// Mean over examples of weighted_ce_loss, each weighted by its true class.
double batch_loss(std::span<const Logits> logit_rows, std::span<const int> true_classes,
                  const ClassWeights& weights);

}  // namespace pcl
