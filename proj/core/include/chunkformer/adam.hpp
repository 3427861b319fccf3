#pragma once

#include <vector>

#include "chunkformer/tensor.hpp"

namespace cf {

struct AdamConfig {
  real lr = real{5e-4};
  real beta1 = real{0.9};
  real beta2 = real{0.999};
  real eps = real{1e-8};
};

// Bias-corrected Adam over a fixed set of parameter tensors. Gradients are
// read from each tensor's grad buffer; call zero_grad() after step().
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg);

  void step();
  void zero_grad();

  long long step_count() const { return t_; }
  const std::vector<std::vector<real>>& moment1() const { return m_; }
  const std::vector<std::vector<real>>& moment2() const { return v_; }
  // Restores state saved from a checkpoint; shapes must match the params.
  void restore(long long t, std::vector<std::vector<real>> m,
               std::vector<std::vector<real>> v);

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  long long t_ = 0;
  std::vector<std::vector<real>> m_;
  std::vector<std::vector<real>> v_;
};

}  // namespace cf
