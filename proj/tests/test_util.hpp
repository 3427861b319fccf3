#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "chunkformer/tensor.hpp"

namespace cf::test {

inline double rel_err(double a, double b) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) / scale;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, std::mt19937_64& rng,
                            bool requires_grad = true, double lo = -2.0,
                            double hi = 2.0) {
  return Tensor::uniform(std::move(shape), static_cast<real>(lo),
                         static_cast<real>(hi), rng, requires_grad);
}

// Central finite differences against the analytic gradient. loss_fn must
// rebuild the graph from the same parameter tensors on every call.
struct GradCheckResult {
  double max_rel_err = 0;
  std::size_t checked = 0;
};

inline GradCheckResult check_gradients(std::vector<Tensor> params,
                                       const std::function<Tensor()>& loss_fn,
                                       double h = 1e-5) {
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = loss_fn();
  backward(loss);
  std::vector<std::vector<real>> analytic;
  for (Tensor& p : params)
    analytic.emplace_back(p.grad().begin(), p.grad().end());

  GradCheckResult res;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto data = params[pi].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const real orig = data[i];
      data[i] = orig + static_cast<real>(h);
      const double up = loss_fn().item();
      data[i] = orig - static_cast<real>(h);
      const double down = loss_fn().item();
      data[i] = orig;
      const double fd = (up - down) / (2 * h);
      res.max_rel_err = std::max(
          res.max_rel_err, rel_err(static_cast<double>(analytic[pi][i]), fd));
      ++res.checked;
    }
  }
  return res;
}

}  // namespace cf::test
