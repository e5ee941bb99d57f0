#include "doctest.h"
#include "percog/adam.hpp"
#include "percog/autodiff.hpp"
#include "test_helpers.hpp"

using namespace percog;
using percog::testing::check_gradients;
using percog::testing::random_tensor;

namespace {

Var rp(std::vector<int> shape, Rng& rng, double scale = 1.0) {
  return make_param(random_tensor(std::move(shape), rng, scale));
}

}  // namespace

TEST_CASE("elementwise and reduction gradients match finite differences") {
  Rng rng(1);
  Var a = rp({3, 4}, rng);
  Var b = rp({3, 4}, rng);
  check_gradients({a, b}, [&] { return sum_all(mul(add(a, b), sub(a, b))); });
  check_gradients({a, b}, [&] { return mean_all(div(a, add_scalar(square(b), 2.0))); });
  check_gradients({a}, [&] { return sum_all(relu(scale(a, 1.7))); });
  check_gradients({a}, [&] { return sum_all(tanh_v(a)); });
  check_gradients({a}, [&] { return sum_all(sigmoid_v(a)); });
  check_gradients({a}, [&] { return sum_all(clamp_upper(square(a), 0.8)); });
  check_gradients({a, b}, [&] { return sum_sq_diff(a, b); });
  check_gradients({a, b}, [&] { return mse(tanh_v(a), sigmoid_v(b)); });
}

TEST_CASE("shaping op gradients") {
  Rng rng(2);
  Var a = rp({6}, rng);
  Var b = rp({4}, rng);
  Var m = rp({3, 5}, rng);
  check_gradients({a, b}, [&] {
    Var cat = concat_vec({a, b});
    return sum_all(square(slice_vec(cat, 2, 6)));
  });
  check_gradients({m}, [&] { return sum_all(square(transpose2(m))); });
  check_gradients({m}, [&] { return sum_all(square(mean_rows(m))); });
  check_gradients({m}, [&] { return sum_all(square(reshape(m, {5, 3}))); });
  Var r1 = rp({2, 4}, rng);
  Var r2 = rp({3, 4}, rng);
  check_gradients({r1, r2}, [&] { return sum_all(square(concat_rows({r1, r2}))); });
  check_gradients({m}, [&] { return sum_all(square(col(m, 2))); });
  check_gradients({a, b}, [&] {
    Var c1 = slice_vec(a, 0, 4);
    return sum_all(square(stack_cols({c1, b, c1})));
  });
  Var p = rp({8, 3}, rng);
  check_gradients({p}, [&] { return sum_all(square(pair_rows_sum(p))); });
}

TEST_CASE("linear algebra gradients") {
  Rng rng(3);
  Var w = rp({4, 6}, rng);
  Var x = rp({6}, rng);
  Var bias = rp({4}, rng);
  check_gradients({w, x, bias}, [&] { return sum_all(square(linear(w, bias, x))); });
  Var a = rp({3, 4}, rng);
  Var b = rp({4, 5}, rng);
  check_gradients({a, b}, [&] { return sum_all(square(matmul(a, b))); });
  Var xm = rp({4, 7}, rng);
  Var bb = rp({4}, rng);
  check_gradients({xm, bb}, [&] { return sum_all(square(add_bias_rows(xm, bb))); });
}

TEST_CASE("temporal op gradients") {
  Rng rng(4);
  Var x = rp({3, 12}, rng);
  Var w3 = rp({3, 3, 2}, rng, 0.5);
  Var w5 = rp({5, 3, 2}, rng, 0.5);
  check_gradients({x, w3}, [&] { return sum_all(square(conv1d(x, w3, 1, 1))); });
  check_gradients({x, w5}, [&] { return sum_all(square(conv1d(x, w5, 2, 1))); });
  check_gradients({x, w3}, [&] { return sum_all(square(conv1d(x, w3, 1, 2))); });
  check_gradients({x, w5}, [&] { return sum_all(square(conv1d(x, w5, 2, 2))); });
  check_gradients({x, w3}, [&] { return sum_all(square(tconv1d(x, w3, 1))); });
  check_gradients({x, w3}, [&] { return sum_all(square(tconv1d(x, w3, 2))); });
  check_gradients({x}, [&] { return sum_all(square(maxpool1d(x, 3, 1))); });
  check_gradients({x}, [&] { return sum_all(square(maxpool1d(x, 3, 2))); });
  check_gradients({x}, [&] { return sum_all(square(avgpool1d(x, 3, 1))); });
  check_gradients({x}, [&] { return sum_all(square(avgpool1d(x, 3, 2))); });
  check_gradients({x}, [&] { return sum_all(square(avgpool1d(x, 2, 2))); });
  check_gradients({x}, [&] { return sum_all(square(upsample_nearest2(x))); });
  check_gradients({x}, [&] { return sum_all(square(upsample_linear2(x))); });
}

TEST_CASE("temporal ops produce the contracted lengths") {
  Rng rng(5);
  Var x = make_const(random_tensor({2, 16}, rng));
  Var w = make_const(random_tensor({3, 2, 2}, rng));
  CHECK(conv1d(x, w, 1, 1)->val.dim(1) == 16);
  CHECK(conv1d(x, w, 2, 1)->val.dim(1) == 8);
  CHECK(conv1d(x, w, 1, 2)->val.dim(1) == 16);
  CHECK(tconv1d(x, w, 2)->val.dim(1) == 32);
  CHECK(maxpool1d(x, 3, 2)->val.dim(1) == 8);
  CHECK(upsample_nearest2(x)->val.dim(1) == 32);
  Var w5 = make_const(random_tensor({5, 2, 2}, rng));
  CHECK(conv1d(x, w5, 2, 2)->val.dim(1) == 8);
}

TEST_CASE("softmax gradients and mask behaviour") {
  Rng rng(6);
  Var logits = rp({10}, rng);
  std::vector<char> mask{1, 0, 1, 1, 0, 1, 0, 0, 1, 1};
  Var target = make_const(random_tensor({10}, rng));
  check_gradients({logits}, [&] {
    return sum_sq_diff(softmax_masked(logits, mask), target);
  });
  Var probs = softmax_masked(logits, mask);
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) {
    if (!mask[static_cast<std::size_t>(i)]) CHECK(probs->val[i] == 0.0);
    CHECK(probs->val[i] >= 0.0);
    sum += probs->val[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS(softmax_masked(logits, std::vector<char>(10, 0)));

  Var rows = rp({3, 5}, rng);
  Var tgt = make_const(random_tensor({3, 5}, rng));
  check_gradients({rows}, [&] { return sum_sq_diff(softmax_rows(rows), tgt); });
}

TEST_CASE("scale_by routes gradients to the indexed coefficient") {
  Rng rng(7);
  Var x = rp({3, 3}, rng);
  Var coeffs = rp({4}, rng);
  check_gradients({x, coeffs}, [&] { return sum_all(square(scale_by(x, coeffs, 2))); });
}

TEST_CASE("dropout is identity in evaluation mode and a scaled mask in training") {
  Rng rng(8);
  Var x = make_param(random_tensor({100}, rng));
  Rng drng(9);
  Var eval_out = dropout(x, 0.4, drng, false);
  CHECK(eval_out.get() == x.get());
  Var train_out = dropout(x, 0.4, drng, true);
  int zeros = 0;
  for (int i = 0; i < 100; ++i) {
    double r = train_out->val[i] / x->val[i];
    if (train_out->val[i] == 0.0)
      ++zeros;
    else
      CHECK(r == doctest::Approx(1.0 / 0.6));
  }
  CHECK(zeros > 10);
  CHECK(zeros < 80);
}

TEST_CASE("backward accumulates into shared subexpressions") {
  Var x = make_param(Tensor::vec({2.0}));
  Var y = mul(x, x);          // x^2
  Var z = add(mul(y, x), y);  // x^3 + x^2
  backward(z);
  CHECK(x->grad[0] == doctest::Approx(3.0 * 4.0 + 2.0 * 2.0));
}

TEST_CASE("adam first step moves against the gradient sign") {
  Var p = make_param(Tensor::vec({1.0, -2.0, 0.5}));
  Adam opt({p}, 0.1);
  Var loss = sum_all(mul(p, make_const(Tensor::vec({3.0, -1.0, 0.0}))));
  opt.zero_grad();
  backward(loss);
  std::vector<double> before = p->val.v;
  opt.step();
  CHECK(p->val[0] < before[0]);   // gradient +3
  CHECK(p->val[1] > before[1]);   // gradient -1
  CHECK(p->val[2] == before[2]);  // gradient 0
}

TEST_CASE("adam with zero learning rate leaves parameters untouched") {
  Rng rng(10);
  Var p = make_param(random_tensor({5}, rng));
  std::vector<double> before = p->val.v;
  Adam opt({p}, 0.0);
  backward(sum_all(square(p)));
  opt.step();
  CHECK(p->val.v == before);
}
