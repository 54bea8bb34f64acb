#include <cmath>

#include "doctest.h"

#include "mrc/autodiff.hpp"
#include "mrc/errors.hpp"
#include "mrc/gradcheck.hpp"

using namespace mrc;

namespace {
Var cst(std::size_t r, std::size_t c, std::initializer_list<double> v) {
  return constant(Tensor::matrix(r, c, v));
}
}  // namespace

TEST_CASE("matmul") {
  CHECK(matmul(cst(1, 2, {1, 2}), cst(2, 1, {3, 4})).value() == Tensor::matrix(1, 1, {11}));
  Tensor eye = Tensor::matrix(2, 2, {1, 0, 0, 1});
  Tensor a = Tensor::matrix(2, 2, {2, 3, 4, 5});
  CHECK(matmul(constant(eye), constant(a)).value() == a);
  CHECK(matmul(constant(Tensor({2, 2})), constant(a)).value() == Tensor({2, 2}));
  CHECK_THROWS_AS(matmul(cst(1, 2, {1, 2}), cst(1, 2, {1, 2})), ShapeError);
}

TEST_CASE("broadcasting add and mul") {
  Var a = cst(2, 2, {1, 2, 3, 4});
  CHECK(add(a, cst(1, 2, {10, 20})).value() == Tensor::matrix(2, 2, {11, 22, 13, 24}));
  CHECK(mul(a, cst(2, 1, {2, 3})).value() == Tensor::matrix(2, 2, {2, 4, 9, 12}));
  CHECK_THROWS_AS(add(a, cst(1, 3, {1, 2, 3})), ShapeError);
}

TEST_CASE("masked softmax values") {
  const std::vector<std::uint8_t> all = {1, 1, 1};
  Tensor u = masked_softmax(cst(1, 3, {0, 0, 0}), Mask::row(all), 1).value();
  for (double p : u.data()) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const std::vector<std::uint8_t> two = {1, 1, 0};
  Tensor h = masked_softmax(cst(1, 3, {1, 1, 123}), Mask::row(two), 1).value();
  CHECK(h[0] == 0.5);
  CHECK(h[1] == 0.5);
  CHECK(h[2] == 0.0);

  Tensor d = masked_softmax(cst(1, 3, {0, std::log(2.0), std::log(3.0)}), Mask::row(all), 1).value();
  CHECK(std::abs(d[0] - 1.0 / 6) < 1e-15);
  CHECK(std::abs(d[1] - 2.0 / 6) < 1e-15);
  CHECK(std::abs(d[2] - 3.0 / 6) < 1e-15);

  const std::vector<std::uint8_t> none = {0, 0, 0};
  CHECK_THROWS_AS(masked_softmax(cst(1, 3, {0, 0, 0}), Mask::row(none), 1), DegenerateSliceError);
}

TEST_CASE("softmax along axis 0") {
  Var x = cst(2, 2, {0, std::log(3.0), 0, 0});
  Tensor p = masked_softmax(x, Mask({2, 2}, true), 0).value();
  CHECK(p.at(0, 0) == doctest::Approx(0.5));
  CHECK(p.at(0, 1) == doctest::Approx(0.75));
  CHECK(p.at(1, 1) == doctest::Approx(0.25));
}

TEST_CASE("masked log-softmax matches log of softmax") {
  const std::vector<std::uint8_t> v = {1, 0, 1, 1};
  Var x = cst(1, 4, {0.3, 9.0, -1.2, 2.0});
  Tensor lp = masked_log_softmax(x, Mask::row(v), 1).value();
  Tensor p = masked_softmax(x, Mask::row(v), 1).value();
  for (std::size_t i : {0, 2, 3}) CHECK(lp[i] == doctest::Approx(std::log(p[i])).epsilon(1e-14));
  CHECK(lp[1] == 0.0);
}

TEST_CASE("backward of simple functions") {
  ParamStore store;
  Parameter& x = store.add("x", "g", Tensor::matrix(1, 2, {1, 2}));
  GradientMap g = backward(sum(mul(param(x), param(x))));
  CHECK(g.at("x") == Tensor::matrix(1, 2, {2, 4}));

  Parameter& z = store.add("z", "g", Tensor::scalar(0.0));
  CHECK(backward(tanh(param(z))).at("z").item() == 1.0);
}

TEST_CASE("backward is repeatable and skips frozen parameters") {
  ParamStore store;
  Parameter& w = store.add("w", "g", Tensor::matrix(2, 2, {0.1, -0.2, 0.3, 0.4}));
  store.add("frozen", "g", Tensor::matrix(1, 2, {1, 1}), false);
  Var loss = sum(tanh(matmul(param(store.at("frozen")), param(w))));
  GradientMap a = backward(loss);
  GradientMap b = backward(loss);
  CHECK(a.at("w") == b.at("w"));
  CHECK(a.count("frozen") == 0);
  CHECK_THROWS_AS(backward(param(w)), ContractError);
}

TEST_CASE("additive scores match the explicit sum") {
  Var x = cst(2, 2, {0.1, -0.4, 0.7, 0.2});
  Var y = cst(3, 2, {0.5, 0.5, -0.3, 0.9, 0.0, -1.0});
  Var v = cst(1, 2, {1.5, -0.5});
  Tensor s = additive_scores(x, y, v).value();
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double e = 0;
      for (std::size_t k = 0; k < 2; ++k) {
        e += v.value()[k] * std::tanh(x.value().at(i, k) + y.value().at(j, k));
      }
      CHECK(s.at(i, j) == doctest::Approx(e).epsilon(1e-14));
    }
  }
}

TEST_CASE("every op passes a finite-difference check") {
  PrecisionGuard guard(Precision::kFloat64);
  ParamStore s;
  Parameter& a = s.add("a", "a", Tensor::matrix(2, 3, {0.3, -0.1, 0.8, 0.05, -0.6, 0.4}));
  Parameter& b = s.add("b", "b", Tensor::matrix(3, 2, {0.2, 0.7, -0.5, 0.1, 0.9, -0.3}));
  Parameter& t = s.add("t", "t", Tensor::matrix(4, 2, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6, 0.7, 0.8}));
  Parameter& v = s.add("v", "v", Tensor::matrix(1, 3, {0.4, -0.9, 0.3}));
  const std::vector<std::int32_t> idx = {2, 0, 2};
  const std::vector<std::size_t> segs = {1, 2};
  const std::vector<std::uint8_t> rows = {1, 1};
  const std::vector<std::uint8_t> cols = {1, 0, 1};
  Mask m = Mask::outer(rows, cols);

  auto loss = [&] {
    Var ab = matmul(param(a), param(b));                              // 2x2
    Var g = gather_rows(param(t), idx);                               // 3x2
    Var seg = segment_max(g, segs);                                   // 2x2
    Var z = concat({sigmoid(ab), relu(add(seg, constant(Tensor({1, 2}, 0.05))))}, 1);  // 2x4
    Var sm = masked_softmax(mul(param(a), param(v)), m, 1);           // 2x3
    Var ls = masked_log_softmax(transpose(param(b)), Mask({2, 3}, true), 0);
    Var sc = additive_scores(param(a), transpose(slice(param(b), 1, 0, 2)), param(v));
    Var mx = masked_max_cols(param(a), m);
    return add(add(add(sum(tanh(z)), dot(sm, param(a))), sum(scale(ls, 0.3))),
               add(sum(mul(sc, sc)), add(sum(mx), pick(reshape(param(t), {2, 4}), 1, 3))));
  };
  std::vector<Parameter*> ps = {&a, &b, &t, &v};
  GradCheckReport r = grad_check(loss, ps);
  CHECK(r.max_rel_error < 1e-6);
  CHECK(r.coords == 6 + 6 + 8 + 3);
}

TEST_CASE("branch recorder sees relu sign changes") {
  ParamStore s;
  Parameter& x = s.add("x", "g", Tensor::matrix(1, 2, {0.5, -0.5}));
  BranchRecorder r;
  relu(param(x));
  const auto first = r.signature();
  r.reset();
  relu(param(x));
  CHECK(r.signature() == first);
  r.reset();
  x.value[1] = 0.5;
  relu(param(x));
  CHECK(r.signature() != first);
}
