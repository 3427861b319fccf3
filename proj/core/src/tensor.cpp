#include "chunkformer/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "chunkformer/errors.hpp"

namespace cf {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<real> data,
               bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must be non-empty");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be >= 1");
  }
  if (shape_product(shape) != data.size()) {
    throw DimensionError("data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  node_ = std::make_shared<detail::Node>();
  node_->id = g_next_id.fetch_add(1);
  node_->shape = std::move(shape);
  node_->value = std::move(data);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  std::vector<real> data(shape_product(shape), real{0});
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, real v,
                    bool requires_grad) {
  std::vector<real> data(shape_product(shape), v);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(real v, bool requires_grad) {
  return Tensor({1}, {v}, requires_grad);
}

Tensor Tensor::uniform(std::vector<std::size_t> shape, real lo, real hi,
                       std::mt19937_64& rng, bool requires_grad) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<real> data(shape_product(shape));
  for (real& v : data) v = static_cast<real>(dist(rng));
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::size() const { return node_->value.size(); }

std::size_t Tensor::rows() const {
  return node_->shape.size() >= 2 ? node_->shape[0] : 1;
}

std::size_t Tensor::cols() const {
  return node_->shape.size() >= 2 ? node_->shape[1] : node_->shape[0];
}

std::span<const real> Tensor::data() const { return node_->value; }

std::span<real> Tensor::mutable_data() { return node_->value; }

bool Tensor::requires_grad() const { return node_->requires_grad; }

std::span<const real> Tensor::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

void Tensor::zero_grad() {
  node_->grad.assign(node_->value.size(), real{0});
}

real Tensor::item() const {
  if (size() != 1) throw ContractError("item() on non-scalar tensor");
  return node_->value[0];
}

real Tensor::at(std::size_t r, std::size_t c) const {
  return node_->value[r * cols() + c];
}

// Creates the output node of an op. The tape (parents + backward_fn) is
// recorded only when some input requires grad; otherwise the result is a
// plain value and the graph stays empty.
Tensor make_op(std::vector<std::size_t> shape, std::vector<real> value,
               std::vector<Tensor> parents,
               std::function<void(detail::Node&)> fn) {
  bool rg = false;
  for (const Tensor& p : parents) rg = rg || p.requires_grad();
  Tensor out(std::move(shape), std::move(value), rg);
  if (rg) {
    for (Tensor& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward_fn = std::move(fn);
  }
  return out;
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw ContractError("backward() requires a scalar loss");
  if (!loss.requires_grad()) return;

  // Collect reachable nodes, then replay in reverse creation order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<detail::Node*> stack{loss.node_.get()};
  while (!stack.empty()) {
    detail::Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) {
      if (p->requires_grad) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(),
            [](const detail::Node* a, const detail::Node* b) {
              return a->id > b->id;
            });

  loss.node_->ensure_grad();
  loss.node_->grad[0] += real{1};
  for (detail::Node* n : order) {
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---- ops ----

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 ||
      a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul shape mismatch: " + shape_str(a.shape()) +
                         " x " + shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<real> out(m * n, real{0});
  const auto av = a.data();
  const auto bv = b.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const real aip = av[i * k + p];
      if (aip == real{0}) continue;
      const real* brow = &bv[p * n];
      real* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return make_op({m, n}, std::move(out), {a, b},
                 [m, k, n](detail::Node& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   // dA = dC B^T ; dB = A^T dC
                   if (pa.requires_grad) {
                     pa.ensure_grad();
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t p = 0; p < k; ++p) {
                         real acc = 0;
                         for (std::size_t j = 0; j < n; ++j)
                           acc += self.grad[i * n + j] * pb.value[p * n + j];
                         pa.grad[i * k + p] += acc;
                       }
                   }
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     for (std::size_t p = 0; p < k; ++p)
                       for (std::size_t i = 0; i < m; ++i) {
                         const real aip = pa.value[i * k + p];
                         if (aip == real{0}) continue;
                         for (std::size_t j = 0; j < n; ++j)
                           pb.grad[p * n + j] += aip * self.grad[i * n + j];
                       }
                   }
                 });
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2)
    throw DimensionError("transpose expects a 2-D tensor");
  const std::size_t m = a.shape()[0], n = a.shape()[1];
  std::vector<real> out(m * n);
  const auto av = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  return make_op({n, m}, std::move(out), {a}, [m, n](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        p.grad[i * n + j] += self.grad[j * m + i];
  });
}

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + " shape mismatch: " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<real> out(a.size());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    for (int s = 0; s < 2; ++s) {
      auto& p = *self.parents[s];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) p.grad[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<real> out(a.size());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pa.grad[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i) pb.grad[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<real> out(a.size());
  const auto av = a.data(), bv = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i)
        pa.grad[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.size(); ++i)
        pb.grad[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, real s) {
  std::vector<real> out(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * s;
  return make_op(a.shape(), std::move(out), {a}, [s](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i)
      p.grad[i] += self.grad[i] * s;
  });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  const std::size_t m = a.rows(), n = a.cols();
  if (bias.size() != n) {
    throw DimensionError("add_row bias length " + std::to_string(bias.size()) +
                         " vs row width " + std::to_string(n));
  }
  std::vector<real> out(a.size());
  const auto av = a.data(), bv = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] + bv[j];
  return make_op(a.shape(), std::move(out), {a, bias},
                 [m, n](detail::Node& self) {
                   auto& pa = *self.parents[0];
                   auto& pb = *self.parents[1];
                   if (pa.requires_grad) {
                     pa.ensure_grad();
                     for (std::size_t i = 0; i < self.size(); ++i)
                       pa.grad[i] += self.grad[i];
                   }
                   if (pb.requires_grad) {
                     pb.ensure_grad();
                     for (std::size_t i = 0; i < m; ++i)
                       for (std::size_t j = 0; j < n; ++j)
                         pb.grad[j] += self.grad[i * n + j];
                   }
                 });
}

Tensor relu(const Tensor& a) {
  std::vector<real> out(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = av[i] > real{0} ? av[i] : real{0};
  return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i)
      if (p.value[i] > real{0}) p.grad[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<real> out(a.size());
  const auto av = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const real z = av[i];
    out[i] = z >= real{0} ? real{1} / (real{1} + std::exp(-z))
                          : std::exp(z) / (real{1} + std::exp(z));
  }
  return make_op(a.shape(), std::move(out), {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < self.size(); ++i) {
      const real y = self.value[i];
      p.grad[i] += self.grad[i] * y * (real{1} - y);
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  const auto av = a.data();
  std::vector<real> out(a.size());
  for (std::size_t i = 0; i < m; ++i) {
    real mx = -std::numeric_limits<real>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const real v = av[i * n + j];
      if (std::isnan(v)) throw NumericError("softmax_rows: NaN input");
      mx = std::max(mx, v);
    }
    if (mx == -std::numeric_limits<real>::infinity()) {
      // Fully masked row: weight zero everywhere.
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] = real{0};
      continue;
    }
    real denom = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const real e = std::exp(av[i * n + j] - mx);
      out[i * n + j] = e;
      denom += e;
    }
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] /= denom;
  }
  return make_op(a.shape(), std::move(out), {a}, [m, n](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < m; ++i) {
      real dot = 0;
      for (std::size_t j = 0; j < n; ++j)
        dot += self.grad[i * n + j] * self.value[i * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        const real y = self.value[i * n + j];
        p.grad[i * n + j] += y * (self.grad[i * n + j] - dot);
      }
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                  real eps) {
  const std::size_t m = a.rows(), d = a.cols();
  if (d == 0) throw DimensionError("layer_norm: zero feature dimension");
  if (gamma.size() != d || beta.size() != d) {
    throw DimensionError("layer_norm: gamma/beta length must equal " +
                         std::to_string(d));
  }
  const auto av = a.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();
  std::vector<real> out(a.size());
  std::vector<real> xhat(a.size());
  std::vector<real> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    real mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += av[i * d + j];
    mean /= static_cast<real>(d);
    real var = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const real c = av[i * d + j] - mean;
      var += c * c;
    }
    var /= static_cast<real>(d);
    inv_std[i] = real{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat[i * d + j] = (av[i * d + j] - mean) * inv_std[i];
      out[i * d + j] = gv[j] * xhat[i * d + j] + bv[j];
    }
  }
  return make_op(
      a.shape(), std::move(out), {a, gamma, beta},
      [m, d, xhat = std::move(xhat),
       inv_std = std::move(inv_std)](detail::Node& self) {
        auto& pa = *self.parents[0];
        auto& pg = *self.parents[1];
        auto& pb = *self.parents[2];
        if (pg.requires_grad) {
          pg.ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j)
              pg.grad[j] += self.grad[i * d + j] * xhat[i * d + j];
        }
        if (pb.requires_grad) {
          pb.ensure_grad();
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < d; ++j)
              pb.grad[j] += self.grad[i * d + j];
        }
        if (pa.requires_grad) {
          pa.ensure_grad();
          for (std::size_t i = 0; i < m; ++i) {
            real mean_dxhat = 0, mean_dxhat_xhat = 0;
            for (std::size_t j = 0; j < d; ++j) {
              const real dxhat = self.grad[i * d + j] * pg.value[j];
              mean_dxhat += dxhat;
              mean_dxhat_xhat += dxhat * xhat[i * d + j];
            }
            mean_dxhat /= static_cast<real>(d);
            mean_dxhat_xhat /= static_cast<real>(d);
            for (std::size_t j = 0; j < d; ++j) {
              const real dxhat = self.grad[i * d + j] * pg.value[j];
              pa.grad[i * d + j] +=
                  inv_std[i] *
                  (dxhat - mean_dxhat - xhat[i * d + j] * mean_dxhat_xhat);
            }
          }
        }
      });
}

Tensor bce_with_logits(const Tensor& logits, const std::vector<real>& targets) {
  const std::size_t n = logits.size();
  if (targets.size() != n) {
    throw DimensionError("bce_with_logits: " + std::to_string(n) +
                         " logits vs " + std::to_string(targets.size()) +
                         " targets");
  }
  const auto zv = logits.data();
  real loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const real z = zv[i];
    // max(z,0) - t*z + log(1 + exp(-|z|))
    loss += std::max(z, real{0}) - targets[i] * z +
            std::log1p(std::exp(-std::abs(z)));
  }
  loss /= static_cast<real>(n);
  return make_op({1}, {loss}, {logits}, [n, targets](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    const real g = self.grad[0] / static_cast<real>(n);
    for (std::size_t i = 0; i < n; ++i) {
      const real z = p.value[i];
      const real s = z >= real{0} ? real{1} / (real{1} + std::exp(-z))
                                  : std::exp(z) / (real{1} + std::exp(z));
      p.grad[i] += g * (s - targets[i]);
    }
  });
}

Tensor sum(const Tensor& a) {
  real s = 0;
  for (real v : a.data()) s += v;
  return make_op({1}, {s}, {a}, [](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t i = 0; i < p.value.size(); ++i)
      p.grad[i] += self.grad[0];
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  for (const Tensor& p : parts) {
    if (p.cols() != n) throw DimensionError("concat_rows: column mismatch");
    m += p.rows();
  }
  std::vector<real> out;
  out.reserve(m * n);
  for (const Tensor& p : parts)
    out.insert(out.end(), p.data().begin(), p.data().end());
  std::vector<std::size_t> sizes;
  for (const Tensor& p : parts) sizes.push_back(p.size());
  return make_op({m, n}, std::move(out), parts,
                 [sizes = std::move(sizes)](detail::Node& self) {
                   std::size_t off = 0;
                   for (std::size_t s = 0; s < self.parents.size(); ++s) {
                     auto& p = *self.parents[s];
                     if (p.requires_grad) {
                       p.ensure_grad();
                       for (std::size_t i = 0; i < sizes[s]; ++i)
                         p.grad[i] += self.grad[off + i];
                     }
                     off += sizes[s];
                   }
                 });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  const std::size_t m = parts[0].rows();
  std::size_t n = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != m) throw DimensionError("concat_cols: row mismatch");
    n += p.cols();
  }
  std::vector<real> out(m * n);
  std::size_t coff = 0;
  std::vector<std::size_t> widths;
  for (const Tensor& p : parts) {
    const std::size_t w = p.cols();
    const auto pv = p.data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j)
        out[i * n + coff + j] = pv[i * w + j];
    widths.push_back(w);
    coff += w;
  }
  return make_op({m, n}, std::move(out), parts,
                 [m, n, widths = std::move(widths)](detail::Node& self) {
                   std::size_t coff = 0;
                   for (std::size_t s = 0; s < self.parents.size(); ++s) {
                     auto& p = *self.parents[s];
                     const std::size_t w = widths[s];
                     if (p.requires_grad) {
                       p.ensure_grad();
                       for (std::size_t i = 0; i < m; ++i)
                         for (std::size_t j = 0; j < w; ++j)
                           p.grad[i * w + j] += self.grad[i * n + coff + j];
                     }
                     coff += w;
                   }
                 });
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  const std::size_t m = a.rows(), n = a.cols();
  if (r0 >= r1 || r1 > m) throw DimensionError("slice_rows: bad range");
  const auto av = a.data();
  std::vector<real> out(av.begin() + r0 * n, av.begin() + r1 * n);
  return make_op({r1 - r0, n}, std::move(out), {a},
                 [r0, n](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t i = 0; i < self.size(); ++i)
                     p.grad[r0 * n + i] += self.grad[i];
                 });
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  const std::size_t m = a.rows(), n = a.cols();
  if (c0 >= c1 || c1 > n) throw DimensionError("slice_cols: bad range");
  const std::size_t w = c1 - c0;
  const auto av = a.data();
  std::vector<real> out(m * w);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = av[i * n + c0 + j];
  return make_op({m, w}, std::move(out), {a},
                 [m, n, c0, w](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t i = 0; i < m; ++i)
                     for (std::size_t j = 0; j < w; ++j)
                       p.grad[i * n + c0 + j] += self.grad[i * w + j];
                 });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx) {
  const std::size_t n = table.cols();
  const std::size_t vocab = table.rows();
  for (std::size_t i : idx) {
    if (i >= vocab) {
      throw EncodingError("gather_rows: index " + std::to_string(i) +
                          " out of vocab " + std::to_string(vocab));
    }
  }
  const auto tv = table.data();
  std::vector<real> out(idx.size() * n);
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = tv[idx[r] * n + j];
  return make_op({idx.size(), n}, std::move(out), {table},
                 [n, idx](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t r = 0; r < idx.size(); ++r)
                     for (std::size_t j = 0; j < n; ++j)
                       p.grad[idx[r] * n + j] += self.grad[r * n + j];
                 });
}

Tensor mask_rows(const Tensor& a, const std::vector<std::uint8_t>& mask) {
  const std::size_t m = a.rows(), n = a.cols();
  if (mask.size() != m) throw DimensionError("mask_rows: mask length mismatch");
  const auto av = a.data();
  std::vector<real> out(a.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = mask[i] ? av[i * n + j] : real{0};
  return make_op(a.shape(), std::move(out), {a},
                 [n, mask](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t i = 0; i < mask.size(); ++i) {
                     if (!mask[i]) continue;
                     for (std::size_t j = 0; j < n; ++j)
                       p.grad[i * n + j] += self.grad[i * n + j];
                   }
                 });
}

Tensor dropout(const Tensor& a, real rate, std::mt19937_64& rng) {
  if (rate < real{0} || rate >= real{1})
    throw ConfigError("dropout rate must be in [0,1)");
  if (rate == real{0}) return a;
  std::bernoulli_distribution keep(1.0 - static_cast<double>(rate));
  const real inv = real{1} / (real{1} - rate);
  std::vector<std::uint8_t> kept(a.size());
  for (auto& k : kept) k = keep(rng) ? 1 : 0;
  const auto av = a.data();
  std::vector<real> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = kept[i] ? av[i] * inv : real{0};
  return make_op(a.shape(), std::move(out), {a},
                 [inv, kept = std::move(kept)](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t i = 0; i < self.size(); ++i)
                     if (kept[i]) p.grad[i] += self.grad[i] * inv;
                 });
}

Tensor mask_score_cols(const Tensor& scores,
                       const std::vector<std::uint8_t>& key_mask) {
  const std::size_t m = scores.rows(), n = scores.cols();
  if (key_mask.size() != n)
    throw DimensionError("mask_score_cols: mask length mismatch");
  const real ninf = -std::numeric_limits<real>::infinity();
  const auto av = scores.data();
  std::vector<real> out(scores.size());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = key_mask[j] ? av[i * n + j] : ninf;
  return make_op(scores.shape(), std::move(out), {scores},
                 [n, key_mask](detail::Node& self) {
                   auto& p = *self.parents[0];
                   p.ensure_grad();
                   for (std::size_t i = 0; i < p.value.size() / n; ++i)
                     for (std::size_t j = 0; j < n; ++j)
                       if (key_mask[j])
                         p.grad[i * n + j] += self.grad[i * n + j];
                 });
}

}  // namespace cf
