#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "elp/gradcheck.hpp"
#include "elp/rng.hpp"
#include "elp/tape.hpp"

using namespace elp;
using namespace elp::ad;

namespace {

Tensor random_tensor(Rng& rng, Shape shape, bool rq = true, double lo = -1.5, double hi = 1.5) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), rq);
}

}  // namespace

TEST_CASE("construction rejects NaN/Inf and shape mismatch") {
  CHECK_THROWS(Tensor::from({2}, {1.0, std::nan("")}));
  CHECK_THROWS(Tensor::from({2}, {1.0, INFINITY}));
  CHECK_THROWS(Tensor::from({3}, {1.0, 2.0}));
}

TEST_CASE("add elementwise") {
  Tape tape;
  auto y = tape.add(Tensor::from({2}, {1, 2}), Tensor::from({2}, {3, 4}));
  CHECK(y.values()[0] == 4.0);
  CHECK(y.values()[1] == 6.0);
}

TEST_CASE("softmax of equal logits is uniform") {
  Tape tape;
  auto y = tape.softmax_last(Tensor::from({3}, {0, 0, 0}));
  for (double v : y.values()) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("matmul matches triple-loop oracle") {
  Rng rng(3);
  auto a = random_tensor(rng, {2, 3}, false);
  auto b = random_tensor(rng, {3, 4}, false);
  Tape tape;
  auto c = tape.matmul(a, b);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double acc = 0;
      for (std::size_t p = 0; p < 3; ++p) acc += a.values()[i * 3 + p] * b.values()[p * 4 + j];
      CHECK(c.values()[i * 4 + j] == doctest::Approx(acc).epsilon(1e-12));
    }
}

TEST_CASE("shape mismatch errors name the op") {
  Tape tape;
  auto a = Tensor::from({2, 3}, std::vector<double>(6, 1.0));
  auto b = Tensor::from({2, 2}, std::vector<double>(4, 1.0));
  CHECK_THROWS_WITH_AS(tape.add(a, b), doctest::Contains("add"), std::runtime_error);
  CHECK_THROWS_WITH_AS(tape.matmul(a, a), doctest::Contains("matmul"), std::runtime_error);
}

TEST_CASE("log and sqrt domain errors") {
  Tape tape;
  CHECK_THROWS(tape.log_(Tensor::from({1}, {-1.0})));
  CHECK_THROWS(tape.sqrt_(Tensor::from({1}, {-0.5})));
}

TEST_CASE("backward: x^2 at x=3 gives 6") {
  auto x = Tensor::scalar(3.0, true);
  Tape tape;
  auto y = tape.mul(x, x);
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("backward: no grads on non-requiring leaves") {
  auto c = Tensor::from({3}, {1, 2, 3}, false);
  auto x = Tensor::from({3}, {1, 1, 1}, true);
  Tape tape;
  auto y = tape.sum_all(tape.add(c, x));
  tape.backward(y);
  CHECK(!c.has_grad());
  CHECK(x.grad()[0] == 1.0);
}

TEST_CASE("backward errors: non-scalar root, root off tape") {
  auto x = Tensor::from({2}, {1, 2}, true);
  Tape tape;
  auto y = tape.mul(x, x);
  CHECK_THROWS(tape.backward(y));
  Tape other;
  auto z = other.sum_all(tape.mul(x, x));
  CHECK_THROWS(tape.backward(z));
}

TEST_CASE("repeated backward accumulates leaf grads until cleared") {
  auto x = Tensor::scalar(2.0, true);
  Tape tape;
  auto y = tape.mul(x, x);
  auto s = tape.sum_all(y);
  tape.backward(s);
  tape.backward(s);
  CHECK(x.grad()[0] == doctest::Approx(8.0));
  x.zero_grad();
  tape.backward(s);
  CHECK(x.grad()[0] == doctest::Approx(4.0));
}

TEST_CASE("backward on a sum of two independent graphs concatenates gradients") {
  Rng rng(5);
  auto x1 = random_tensor(rng, {4});
  auto x2 = random_tensor(rng, {4});
  x1.zero_grad();
  x2.zero_grad();
  // joint
  Tape tj;
  auto yj = tj.add(tj.sum_all(tj.mul(x1, x1)), tj.sum_all(tj.tanh_(x2)));
  tj.backward(yj);
  auto g1 = x1.grad(), g2 = x2.grad();
  x1.zero_grad();
  x2.zero_grad();
  // separate
  Tape ta;
  ta.backward(ta.sum_all(ta.mul(x1, x1)));
  Tape tb;
  tb.backward(tb.sum_all(tb.tanh_(x2)));
  for (int i = 0; i < 4; ++i) {
    CHECK(x1.grad()[i] == doctest::Approx(g1[i]).epsilon(1e-14));
    CHECK(x2.grad()[i] == doctest::Approx(g2[i]).epsilon(1e-14));
  }
}

TEST_CASE("every op kind passes finite-difference check over 10 seeds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    auto a = random_tensor(rng, {3, 4});
    auto b = random_tensor(rng, {3, 4});
    auto m1 = random_tensor(rng, {3, 5});
    auto m2 = random_tensor(rng, {5, 2});
    auto pos = random_tensor(rng, {3, 4}, true, 0.3, 2.0);

    struct Case {
      const char* name;
      ScalarFn f;
      std::vector<Tensor> point;
    };
    std::vector<Case> cases = {
        {"add", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.mul(t.add(p[0], p[1]), p[0]));
         }, {a, b}},
        {"sub_mul", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.mul(t.sub(p[0], p[1]), p[1]));
         }, {a, b}},
        {"matmul", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.tanh_(t.matmul(p[0], p[1])));
         }, {m1, m2}},
        {"concat_slice", [](Tape& t, const std::vector<Tensor>& p) {
           auto c = t.concat({p[0], p[1]}, 1);
           return t.sum_all(t.mul(t.slice_rows(c, 1, 3), t.slice_rows(c, 0, 2)));
         }, {a, b}},
        {"reshape", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.mul(t.reshape(p[0], {4, 3}), t.reshape(p[1], {4, 3})));
         }, {a, b}},
        {"relu", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.relu(t.scale(p[0], 2.0)));
         }, {a}},
        {"tanh_sigmoid", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.mul(t.tanh_(p[0]), t.sigmoid(p[1])));
         }, {a, b}},
        {"softmax", [](Tape& t, const std::vector<Tensor>& p) {
           auto s = t.softmax_last(p[0]);
           return t.sum_all(t.mul(s, p[1]));
         }, {a, b}},
        {"log_exp", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.log_(t.exp_(p[0])));
         }, {a}},
        {"log_pos", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.log_(p[0]));
         }, {pos}},
        {"mean_sum", [](Tape& t, const std::vector<Tensor>& p) {
           return t.add(t.mean_all(p[0]), t.sum_all(t.mean_axis0(t.mul(p[0], p[0]))));
         }, {a}},
        {"variance_sqrt", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.sqrt_(variance_axis0(t, p[0])));
         }, {a}},
        {"sum_last_shift", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.mul(t.sum_last(p[0]), t.sum_last(t.shift_rows(p[1], 1))));
         }, {a, b}},
        {"abs_clamp", [](Tape& t, const std::vector<Tensor>& p) {
           return t.sum_all(t.abs_(t.clamp(p[0], -0.9, 0.9)));
         }, {a}},
    };
    for (auto& c : cases) {
      double err = finite_difference_check(c.f, c.point);
      INFO("op=", c.name, " seed=", seed);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("random 4-op graph matches central finite differences") {
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    Rng rng(seed);
    auto x = random_tensor(rng, {4, 4});
    auto w = random_tensor(rng, {4, 4});
    ScalarFn f = [](Tape& t, const std::vector<Tensor>& p) {
      auto h = t.tanh_(t.matmul(p[0], p[1]));
      auto s = t.sigmoid(h);
      return t.mean_all(t.mul(s, h));
    };
    CHECK(finite_difference_check(f, {x, w}) < 1e-4);
  }
}

TEST_CASE("finite difference check: linear function is near-exact") {
  Rng rng(1);
  auto x = random_tensor(rng, {6});
  ScalarFn f = [](Tape& t, const std::vector<Tensor>& p) { return t.sum_all(t.scale(p[0], 3.0)); };
  CHECK(finite_difference_check(f, {x}) < 1e-10);
}

TEST_CASE("finite difference check survives sigmoid saturation at |x|=30") {
  auto x = Tensor::from({2}, {30.0, -30.0}, true);
  ScalarFn f = [](Tape& t, const std::vector<Tensor>& p) { return t.sum_all(t.sigmoid(p[0])); };
  double err = finite_difference_check(f, {x});
  CHECK(std::isfinite(err));
}

TEST_CASE("same seed reproduces bit-identical values and gradients") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    auto x = random_tensor(rng, {5, 5});
    x.zero_grad();
    Tape t;
    auto y = t.mean_all(t.tanh_(t.matmul(x, x)));
    t.backward(y);
    return std::make_pair(y.value(), x.grad());
  };
  auto [v1, g1] = run(99);
  auto [v2, g2] = run(99);
  CHECK(v1 == v2);
  CHECK(g1 == g2);
}

TEST_CASE("straight-through hard: forward one-hot, backward identity") {
  Rng rng(8);
  auto x = random_tensor(rng, {3, 4});
  Tape t;
  auto h = t.straight_through_hard(x);
  for (std::size_t f = 0; f < 3; ++f) {
    double s = 0;
    int nonzero = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      s += h.values()[f * 4 + i];
      if (h.values()[f * 4 + i] != 0.0) ++nonzero;
    }
    CHECK(s == 1.0);
    CHECK(nonzero == 1);
  }
  x.zero_grad();
  auto y = t.sum_all(t.mul(h, h));
  t.backward(y);
  // identity backward: grad equals d(sum h.h)/dh = 2h passed straight through twice
  bool any = false;
  for (double g : x.grad()) any = any || g != 0.0;
  CHECK(any);
}

TEST_CASE("place_block puts mass in the selected block only") {
  auto x = Tensor::from({1, 2}, {0.25, 0.75}, true);
  Tape t;
  auto y = t.place_block(x, 1, 3);
  CHECK(y.shape() == Shape{1, 6});
  CHECK(y.values() == std::vector<double>{0, 0, 0.25, 0.75, 0, 0});
  x.zero_grad();
  t.backward(t.sum_all(t.mul(y, y)));
  CHECK(x.grad()[0] == doctest::Approx(0.5));
  CHECK(x.grad()[1] == doctest::Approx(1.5));
}
