#include "chunkformer/adam.hpp"

#include <cmath>

#include "chunkformer/errors.hpp"

namespace cf {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.lr <= real{0}) throw ConfigError("Adam: learning rate must be > 0");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(p.size(), real{0});
    v_.emplace_back(p.size(), real{0});
  }
}

void Adam::step() {
  ++t_;
  const real bc1 = real{1} - std::pow(cfg_.beta1, static_cast<real>(t_));
  const real bc2 = real{1} - std::pow(cfg_.beta2, static_cast<real>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto data = params_[i].mutable_data();
    const auto grad = params_[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const real g = grad[j];
      m[j] = cfg_.beta1 * m[j] + (real{1} - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (real{1} - cfg_.beta2) * g * g;
      const real mhat = m[j] / bc1;
      const real vhat = v[j] / bc2;
      data[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

void Adam::restore(long long t, std::vector<std::vector<real>> m,
                   std::vector<std::vector<real>> v) {
  if (m.size() != params_.size() || v.size() != params_.size())
    throw CompatibilityError("Adam state does not match parameter count");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (m[i].size() != params_[i].size() || v[i].size() != params_[i].size())
      throw CompatibilityError("Adam state shape mismatch");
  }
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace cf
