#pragma once

#include <cstddef>
#include <vector>

#include "pcl/tensor.hpp"

namespace pcl {

struct AdamConfig {
  double lr = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-6;
};

// Bias-corrected Adam; moments start at zero. No weight decay or clipping.
class Adam {
 public:
  Adam(std::vector<Param*> params, AdamConfig cfg);

  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<Param*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

}  // namespace pcl
