#include <cmath>
#include <random>

#include "chunkformer/adam.hpp"
#include "chunkformer/errors.hpp"
#include "chunkformer/tensor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cf;
using cf::test::check_gradients;
using cf::test::random_tensor;

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(Tensor({0}, {}), DimensionError);
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rows() == 2);
  CHECK(t.cols() == 3);
  CHECK(t.at(1, 2) == 6);
}

TEST_CASE("matmul basics") {
  Tensor eye({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {5, 6, 7, 8});
  Tensor r = matmul(eye, m);
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.data()[i] == m.data()[i]);

  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor c = matmul(a, m);
  CHECK(c.at(0, 0) == 19);
  CHECK(c.at(0, 1) == 22);
  CHECK(c.at(1, 0) == 43);
  CHECK(c.at(1, 1) == 50);

  Tensor z = Tensor::zeros({2, 2});
  Tensor zr = matmul(z, m);
  for (real v : zr.data()) CHECK(v == 0);

  // Error names both shapes.
  try {
    matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
  }
}

TEST_CASE("softmax_rows") {
  Tensor s = softmax_rows(Tensor({1, 3}, {0, 0, 0}));
  for (real v : s.data()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Tensor big = softmax_rows(Tensor({1, 2}, {1000, 1000}));
  CHECK(big.data()[0] == doctest::Approx(0.5));
  CHECK(std::isfinite(big.data()[0]));

  Tensor ln3 = softmax_rows(Tensor({1, 2}, {0, std::log(real{3})}));
  CHECK(ln3.data()[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(ln3.data()[1] == doctest::Approx(0.75).epsilon(1e-12));

  CHECK_THROWS_AS(softmax_rows(Tensor({1, 2}, {std::nan(""), 0})),
                  NumericError);
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  std::mt19937_64 rng(11);
  Tensor a = random_tensor({5, 7}, rng, false);
  Tensor s = softmax_rows(a);
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < 7; ++j) sum += s.at(i, j);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  std::vector<real> shifted(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 7; ++j) shifted[i * 7 + j] += real{3.25};
  Tensor s2 = softmax_rows(Tensor({5, 7}, shifted));
  for (std::size_t i = 0; i < s.size(); ++i)
    CHECK(std::abs(s.data()[i] - s2.data()[i]) <= 1e-12);
}

TEST_CASE("layer_norm") {
  Tensor gamma = Tensor::full({4}, 1);
  Tensor beta = Tensor::zeros({4});
  Tensor c = layer_norm(Tensor({1, 4}, {3, 3, 3, 3}), gamma, beta, real{1e-5});
  for (real v : c.data()) CHECK(v == doctest::Approx(0.0));

  Tensor two = layer_norm(Tensor({1, 2}, {1, 3}), Tensor::full({2}, 1),
                          Tensor::zeros({2}), real{1e-12});
  CHECK(two.data()[0] == doctest::Approx(-1.0).epsilon(1e-9));
  CHECK(two.data()[1] == doctest::Approx(1.0).epsilon(1e-9));

  Tensor beta2({2}, {7, -2});
  Tensor b = layer_norm(Tensor({1, 2}, {4, 9}), Tensor::zeros({2}), beta2,
                        real{1e-5});
  CHECK(b.data()[0] == 7);
  CHECK(b.data()[1] == -2);

  CHECK_THROWS_AS(
      layer_norm(Tensor({1, 2}, {1, 2}), Tensor::zeros({3}),
                 Tensor::zeros({3}), real{1e-5}),
      DimensionError);
}

TEST_CASE("bce_with_logits") {
  CHECK(bce_with_logits(Tensor({1}, {0}), {1}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(bce_with_logits(Tensor({1}, {0}), {0}).item() ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const double big = bce_with_logits(Tensor({1}, {100}), {1}).item();
  CHECK(std::isfinite(big));
  CHECK(big == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(bce_with_logits(Tensor({1}, {std::log(real{3})}), {1}).item() ==
        doctest::Approx(std::log(4.0 / 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(bce_with_logits(Tensor({2}, {0, 0}), {1}), DimensionError);
}

TEST_CASE("bce matches the naive formula for moderate logits") {
  std::mt19937_64 rng(3);
  // keep |z| modest: the naive oracle itself loses precision when the
  // sigmoid saturates
  std::uniform_real_distribution<double> z(-10, 10);
  std::bernoulli_distribution t(0.5);
  for (int i = 0; i < 200; ++i) {
    const double zi = z(rng);
    const double ti = t(rng) ? 1.0 : 0.0;
    const double sig = 1.0 / (1.0 + std::exp(-zi));
    const double naive = -(ti * std::log(sig) + (1 - ti) * std::log(1 - sig));
    const double fused =
        bce_with_logits(Tensor({1}, {static_cast<real>(zi)}),
                        {static_cast<real>(ti)})
            .item();
    CHECK(std::abs(naive - fused) <= 1e-10);
  }
}

TEST_CASE("backward contract") {
  Tensor a = Tensor::zeros({2, 2}, true);
  CHECK_THROWS_AS(backward(a), ContractError);

  // A tensor that does not participate keeps zero gradient.
  Tensor b = Tensor::zeros({2}, true);
  Tensor loss = sum(mul(a, a));
  backward(loss);
  for (real g : b.grad()) CHECK(g == 0);
}

TEST_CASE("gradients match finite differences per op") {
  std::mt19937_64 rng(42);
  // fixed projection so repeated loss evaluations agree exactly
  auto weighted = [](Tensor out) {
    std::mt19937_64 wrng(7);
    Tensor w = random_tensor(out.shape(), wrng, false);
    return sum(mul(out, w));
  };

  SUBCASE("matmul") {
    Tensor a = random_tensor({3, 4}, rng);
    Tensor b = random_tensor({4, 2}, rng);
    auto res = check_gradients({a, b}, [&] { return weighted(matmul(a, b)); });
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("softmax_rows") {
    Tensor a = random_tensor({3, 5}, rng);
    auto res = check_gradients({a}, [&] { return weighted(softmax_rows(a)); });
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("layer_norm") {
    Tensor a = random_tensor({3, 6}, rng);
    Tensor g = random_tensor({6}, rng);
    Tensor be = random_tensor({6}, rng);
    auto res = check_gradients({a, g, be}, [&] {
      return weighted(layer_norm(a, g, be, real{1e-5}));
    });
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("elementwise and structural ops") {
    Tensor a = random_tensor({4, 4}, rng);
    Tensor b = random_tensor({4, 4}, rng);
    Tensor bias = random_tensor({4}, rng);
    auto res = check_gradients({a, b, bias}, [&] {
      Tensor x = add(mul(a, b), sub(a, b));
      x = add_row(scale(x, real{0.5}), bias);
      x = concat_cols({slice_cols(x, 0, 2), slice_cols(x, 2, 4)});
      x = concat_rows({slice_rows(x, 0, 1), slice_rows(x, 1, 4)});
      return weighted(relu(add(x, sigmoid(transpose(x)))));
    });
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("gather_rows") {
    Tensor table = random_tensor({6, 3}, rng);
    auto res = check_gradients({table}, [&] {
      return weighted(gather_rows(table, {0, 3, 3, 5}));
    });
    CHECK(res.max_rel_err < 1e-4);
  }
  SUBCASE("bce composite") {
    Tensor a = random_tensor({2, 3}, rng);
    Tensor w = random_tensor({3, 1}, rng);
    auto res = check_gradients({a, w}, [&] {
      return bce_with_logits(matmul(a, w), {1, 0});
    });
    CHECK(res.max_rel_err < 1e-4);
  }
}

TEST_CASE("ops are deterministic") {
  std::mt19937_64 rng(5);
  Tensor a = random_tensor({8, 8}, rng, false);
  Tensor b = random_tensor({8, 8}, rng, false);
  Tensor r1 = softmax_rows(matmul(a, b));
  Tensor r2 = softmax_rows(matmul(a, b));
  for (std::size_t i = 0; i < r1.size(); ++i)
    CHECK(r1.data()[i] == r2.data()[i]);
}

TEST_CASE("adam") {
  SUBCASE("rejects bad lr") {
    Tensor p = Tensor::zeros({2}, true);
    CHECK_THROWS_AS(Adam({p}, AdamConfig{.lr = 0}), ConfigError);
  }
  SUBCASE("zero gradient leaves params unchanged") {
    Tensor p({3}, {1, 2, 3}, true);
    Adam opt({p}, AdamConfig{.lr = real{0.1}});
    for (int i = 0; i < 5; ++i) {
      opt.zero_grad();
      opt.step();
    }
    CHECK(p.data()[0] == 1);
    CHECK(p.data()[1] == 2);
    CHECK(p.data()[2] == 3);
  }
  SUBCASE("first step with unit gradient moves by about -lr") {
    Tensor p = Tensor::zeros({4}, true);
    Adam opt({p}, AdamConfig{.lr = real{0.01}});
    opt.zero_grad();
    Tensor loss = sum(p);  // d/dp = 1 everywhere
    backward(loss);
    opt.step();
    // bias-corrected mhat/sqrt(vhat) = 1 on the first step
    for (real v : p.data())
      CHECK(v == doctest::Approx(-0.01).epsilon(1e-6));
  }
  SUBCASE("identical params follow identical trajectories") {
    Tensor p1({2}, {0.5, -0.5}, true);
    Tensor p2({2}, {0.5, -0.5}, true);
    Adam o1({p1}, AdamConfig{});
    Adam o2({p2}, AdamConfig{});
    std::mt19937_64 rng(9);
    for (int it = 0; it < 10; ++it) {
      o1.zero_grad();
      o2.zero_grad();
      Tensor w = random_tensor({2}, rng, false);
      backward(sum(mul(p1, w)));
      backward(sum(mul(p2, w)));
      o1.step();
      o2.step();
      CHECK(p1.data()[0] == p2.data()[0]);
      CHECK(p1.data()[1] == p2.data()[1]);
    }
  }
}
