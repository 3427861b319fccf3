#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

namespace cf {

#ifdef CHUNKFORMER_FLOAT32
using real = float;
#else
using real = double;
#endif

namespace detail {

// One recorded node of the dynamic tape. Nodes are created in forward order
// with monotonically increasing ids; backward() replays reachable nodes in
// reverse id order, which is a valid topological order by construction.
struct Node {
  std::uint64_t id = 0;
  std::vector<std::size_t> shape;
  std::vector<real> value;
  std::vector<real> grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;  // scatters self.grad into parents

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), real{0});
  }
};

}  // namespace detail

// Value-semantic handle to an immutable dense tensor of reals, row-major.
// Copies share the underlying node. Operations on tensors with
// requires_grad build the tape as a side effect; the tape is freed when the
// last tensor referencing it goes out of scope.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::size_t> shape, std::vector<real> data,
         bool requires_grad = false);

  static Tensor zeros(std::vector<std::size_t> shape,
                      bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, real v,
                     bool requires_grad = false);
  static Tensor scalar(real v, bool requires_grad = false);
  static Tensor uniform(std::vector<std::size_t> shape, real lo, real hi,
                        std::mt19937_64& rng, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  // 2-D helpers; a 1-D tensor counts as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const real> data() const;
  // Direct mutation of stored values; used by the optimizer between steps.
  // Mutating a tensor that participates in a live graph is a caller bug.
  std::span<real> mutable_data();

  bool requires_grad() const;
  std::span<const real> grad() const;
  void zero_grad();

  real item() const;                         // scalar tensors only
  real at(std::size_t r, std::size_t c) const;  // 2-D indexing

  friend void backward(const Tensor& loss);
  friend Tensor make_op(std::vector<std::size_t> shape,
                        std::vector<real> value, std::vector<Tensor> parents,
                        std::function<void(detail::Node&)> fn);

 private:
  std::shared_ptr<detail::Node> node_;
};

// ---- primitive ops ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise
Tensor scale(const Tensor& a, real s);
Tensor add_row(const Tensor& a, const Tensor& bias);  // bias[n] added to each row
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& a, const Tensor& gamma, const Tensor& beta,
                  real eps);
Tensor bce_with_logits(const Tensor& logits, const std::vector<real>& targets);
Tensor sum(const Tensor& a);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);  // [r0,r1)
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);  // [c0,c1)
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& idx);
// Multiplies each row by mask[r] in {0,1}; masked rows become exactly zero.
Tensor mask_rows(const Tensor& a, const std::vector<std::uint8_t>& mask);
// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& a, real rate, std::mt19937_64& rng);
// Adds constant -inf at masked key columns of a score matrix; masked entries
// get softmax weight exactly zero.
Tensor mask_score_cols(const Tensor& scores,
                       const std::vector<std::uint8_t>& key_mask);

// Accumulates d(loss)/d(leaf) into the grad buffer of every requires_grad
// tensor reachable from loss. Loss must be scalar.
void backward(const Tensor& loss);

}  // namespace cf
