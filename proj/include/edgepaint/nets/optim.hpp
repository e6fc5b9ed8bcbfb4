#pragma once

#include <vector>

#include "edgepaint/core/autodiff.hpp"

namespace ep {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.0;
  double beta2 = 0.9;
  double eps = 1e-8;
};

// Adam with bias correction. At step 1 each parameter moves by at most lr.
class Adam {
 public:
  Adam(std::vector<ag::Var> params, AdamConfig cfg);

  void step();
  void zero_grad();

  std::int64_t steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  std::vector<ag::Var> params_;
  std::vector<Tensor> m_, v_;
  AdamConfig cfg_;
  std::int64_t t_ = 0;
};

}  // namespace ep
