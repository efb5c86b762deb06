#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "season/tensor.hpp"

using namespace season;
using tensor::Tape;
using tensor::Tensor;

namespace {

Tensor random_leaf(Tape& tape, std::vector<int> shape, uint64_t seed,
                   bool requires_grad = true) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  int64_t n = 1;
  for (int d : shape) n *= d;
  std::vector<double> data(n);
  for (double& v : data) v = dist(rng);
  return tape.leaf(std::move(shape), data, requires_grad);
}

}  // namespace

TEST_CASE("sum backward yields all-ones gradient") {
  Tape tape;
  Tensor x = random_leaf(tape, {3, 4}, 1);
  tape.backward(tensor::sum(x));
  for (double g : x.node()->grad) CHECK(g == 1.0);
}

TEST_CASE("sum of x*x backward yields 2x") {
  Tape tape;
  Tensor x = random_leaf(tape, {5}, 2);
  tape.backward(tensor::sum(tensor::mul(x, x)));
  for (int i = 0; i < 5; ++i) {
    CHECK(x.node()->grad[i] ==
          doctest::Approx(2.0 * x.value_at(i)).epsilon(1e-12));
  }
}

TEST_CASE("repeated use of a tensor sums gradient contributions") {
  Tape tape;
  Tensor x = random_leaf(tape, {4}, 3);
  // loss = sum(x) + sum(x) -> grad 2
  tape.backward(tensor::add(tensor::sum(x), tensor::sum(x)));
  for (double g : x.node()->grad) CHECK(g == doctest::Approx(2.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tape tape;
  Tensor x = random_leaf(tape, {2, 2}, 4);
  CHECK_THROWS_AS(tape.backward(x), LossNotScalar);
}

TEST_CASE("matmul rejects incompatible shapes with both in the message") {
  Tape tape;
  Tensor a = random_leaf(tape, {2, 3}, 5);
  Tensor b = random_leaf(tape, {4, 5}, 6);
  try {
    tensor::matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const ShapeMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2,3]") != std::string::npos);
    CHECK(msg.find("[4,5]") != std::string::npos);
  }
}

TEST_CASE("softmax rows with temperature") {
  Tape tape;
  const std::vector<double> logits = {0.0, 0.0};
  Tensor x = tape.leaf({1, 2}, logits);
  Tensor y = tensor::softmax_rows(x, 1.0);
  CHECK(y.value_at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(y.value_at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

  const std::vector<double> l2 = {std::log(2.0), 0.0};
  Tensor x2 = tape.leaf({1, 2}, l2);
  Tensor y2 = tensor::softmax_rows(x2, 0.5);  // exp doubles in log space
  CHECK(y2.value_at(0, 0) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(y2.value_at(0, 1) == doctest::Approx(0.2).epsilon(1e-12));

  CHECK_THROWS(tensor::softmax_rows(x, 0.0));
}

TEST_CASE("softmax invariance under additive logit shift") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> dist(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Tape tape;
    std::vector<double> logits(6);
    for (double& v : logits) v = dist(rng);
    std::vector<double> shifted = logits;
    const double shift = dist(rng) * 50.0;
    for (double& v : shifted) v += shift;
    Tensor y1 = tensor::softmax_rows(tape.leaf({1, 6}, logits), 1.0);
    Tensor y2 = tensor::softmax_rows(tape.leaf({1, 6}, shifted), 1.0);
    double sum = 0.0;
    for (int c = 0; c < 6; ++c) {
      CHECK(y1.value_at(0, c) ==
            doctest::Approx(y2.value_at(0, c)).epsilon(1e-12));
      sum += y1.value_at(0, c);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient linearity: grad(a*f + b*g) = a*grad f + b*grad g") {
  const double ca = 1.7, cb = -0.4;
  std::vector<double> grad_f, grad_g, grad_mix;
  for (int mode = 0; mode < 3; ++mode) {
    Tape tape;
    Tensor x = random_leaf(tape, {6}, 42);
    Tensor f = tensor::sum(tensor::mul(x, x));
    Tensor g = tensor::sum(tensor::gelu(x));
    Tensor loss = mode == 0   ? f
                  : mode == 1 ? g
                              : tensor::add(tensor::scale(f, ca),
                                            tensor::scale(g, cb));
    tape.backward(loss);
    auto& out = mode == 0 ? grad_f : mode == 1 ? grad_g : grad_mix;
    out.assign(x.node()->grad.begin(), x.node()->grad.end());
  }
  for (size_t i = 0; i < grad_mix.size(); ++i) {
    CHECK(grad_mix[i] ==
          doctest::Approx(ca * grad_f[i] + cb * grad_g[i]).epsilon(1e-12));
  }
}

TEST_CASE("finite differences agree on a quadratic") {
  Tape tape;
  Tensor x = random_leaf(tape, {8}, 10);
  Tensor loss = tensor::sum(tensor::mul(x, x));
  tape.backward(loss);
  const tensor::NamedParam params[] = {{"x", x.node()}};
  const auto report = tensor::finite_diff_check(
      [&] {
        Tape t2;
        Tensor x2 = t2.wrap(x.node());
        return tensor::sum(tensor::mul(x2, x2)).item();
      },
      params, 1e-4, 64, 99);
  CHECK(report.max_rel_error <= 1e-9);
}

TEST_CASE("finite differences across the whole op suite") {
  // One composite function touching matmul, transpose, add_rowvec, softmax,
  // layer_norm, gelu, log, slices, concat, masks, take_rows/elements, mean.
  Tape tape;
  Tensor w = random_leaf(tape, {4, 6}, 21);
  Tensor b = random_leaf(tape, {6}, 22);
  Tensor e = random_leaf(tape, {5, 4}, 23);
  Tensor gain = tape.full({6}, 1.0, true);
  Tensor bias = tape.zeros({6}, true);
  auto mask = std::make_shared<std::vector<uint8_t>>(3 * 6, 0);
  (*mask)[2] = 1;
  (*mask)[9] = 1;

  auto forward = [&](Tape& t) {
    Tensor wt = t.wrap(w.node());
    Tensor bt = t.wrap(b.node());
    Tensor et = t.wrap(e.node());
    Tensor gt = t.wrap(gain.node());
    Tensor it = t.wrap(bias.node());
    Tensor rows = tensor::take_rows(et, {0, 2, 4});          // 3 x 4
    Tensor lin = tensor::add_rowvec(tensor::matmul(rows, wt), bt);  // 3 x 6
    Tensor normed = tensor::layer_norm_rows(lin, gt, it);
    Tensor act = tensor::gelu(normed);
    Tensor masked = tensor::masked_fill(act, mask, -2.0);
    Tensor probs = tensor::softmax_rows(masked, 0.7);
    Tensor lp = tensor::log_clamped(probs);
    Tensor left = tensor::slice_cols(lp, 0, 3);
    Tensor right = tensor::slice_cols(lp, 3, 3);
    const Tensor parts[] = {right, left};
    Tensor swapped = tensor::concat_cols(parts);
    Tensor tr = tensor::transpose(swapped);                  // 6 x 3
    Tensor picked = tensor::take_elements(tr, {0, 7, 16, 11});
    return tensor::add(tensor::mean(swapped),
                       tensor::scale(tensor::sum(picked), 0.3));
  };

  Tensor loss = forward(tape);
  tape.backward(loss);
  const tensor::NamedParam params[] = {
      {"w", w.node()}, {"b", b.node()}, {"e", e.node()}, {"gain", gain.node()},
      {"bias", bias.node()}};
  const auto report = tensor::finite_diff_check(
      [&] {
        Tape t2;
        return forward(t2).item();
      },
      params, 1e-5, 64, 123);
  CAPTURE(report.worst_param);
  CAPTURE(report.analytic);
  CAPTURE(report.numeric);
  CHECK(report.max_rel_error <= 1e-6);
}

TEST_CASE("forward values are deterministic for identical inputs") {
  auto run = [] {
    Tape tape;
    Tensor a = random_leaf(tape, {8, 8}, 77);
    Tensor b = random_leaf(tape, {8, 8}, 78);
    return tensor::softmax_rows(tensor::matmul(a, tensor::gelu(b)), 1.0);
  };
  Tensor r1 = run();
  Tensor r2 = run();
  const auto v1 = r1.values();
  const auto v2 = r2.values();
  REQUIRE(v1.size() == v2.size());
  for (size_t i = 0; i < v1.size(); ++i) CHECK(v1[i] == v2[i]);
}

TEST_CASE("dropout: identity at p=0, inverted scaling, gradient masks") {
  std::mt19937_64 rng(5);
  Tape tape;
  Tensor x = random_leaf(tape, {64}, 50);
  Tensor y0 = tensor::dropout(x, 0.0, rng);
  CHECK(y0.node().get() == x.node().get());

  Tensor y = tensor::dropout(x, 0.5, rng);
  int kept = 0;
  for (int i = 0; i < 64; ++i) {
    const double v = y.value_at(i);
    if (v != 0.0) {
      ++kept;
      CHECK(v == doctest::Approx(2.0 * x.value_at(i)).epsilon(1e-12));
    }
  }
  CHECK(kept > 10);
  CHECK(kept < 60);
  tape.backward(tensor::sum(y));
  for (int i = 0; i < 64; ++i) {
    const double g = x.node()->grad[i];
    if (y.value_at(i) == 0.0) {
      CHECK(g == 0.0);
    } else {
      CHECK(g == doctest::Approx(2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("no-grad tapes record no backward work") {
  Tape tape(/*grad_enabled=*/false);
  Tensor x = random_leaf(tape, {4}, 60);
  Tensor y = tensor::mul(x, x);
  CHECK_FALSE(y.requires_grad());
  CHECK_THROWS(tape.backward(tensor::sum(y)));
}
