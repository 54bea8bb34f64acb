#include "doctest.h"

#include "mrc/errors.hpp"
#include "mrc/optim.hpp"

using namespace mrc;

TEST_CASE("first Adam step with unit gradient") {
  PrecisionGuard g(Precision::kFloat64);
  ParamStore s;
  Parameter& p = s.add("p", "g", Tensor::scalar(0.0));
  Adam adam;
  adam.step(s, {{"p", Tensor::scalar(1.0)}});
  // m_hat = 1, v_hat = 1, step = -lr / (1 + 1e-8)
  CHECK(p.value.item() == doctest::Approx(-0.00099999999000000010).epsilon(1e-15));
  CHECK(adam.steps() == 1);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  PrecisionGuard g(Precision::kFloat64);
  ParamStore s;
  Parameter& p = s.add("p", "g", Tensor::matrix(1, 2, {0.25, -3.0}));
  Adam adam;
  adam.step(s, {{"p", Tensor({1, 2})}});
  CHECK(p.value == Tensor::matrix(1, 2, {0.25, -3.0}));
}

TEST_CASE("parameters without a gradient are bitwise untouched") {
  ParamStore s;
  Parameter& a = s.add("a", "g", Tensor::matrix(1, 2, {0.1, 0.2}));
  Parameter& b = s.add("b", "g", Tensor::matrix(1, 2, {0.3, 0.4}));
  const Tensor before = b.value;
  Adam adam;
  adam.step(s, {{"a", Tensor::matrix(1, 2, {1, -1})}});
  CHECK(b.value == before);
  CHECK(a.value != Tensor::matrix(1, 2, {0.1, 0.2}));
  CHECK(adam.moments().count("b") == 0);
}

TEST_CASE("Adam validates before mutating") {
  ParamStore s;
  Parameter& a = s.add("a", "g", Tensor::matrix(1, 2, {0.1, 0.2}));
  s.add("frozen", "g", Tensor::scalar(1.0), false);
  Adam adam;
  CHECK_THROWS_AS(adam.step(s, {{"missing", Tensor::scalar(1)}}), ContractError);
  CHECK_THROWS_AS(adam.step(s, {{"frozen", Tensor::scalar(1)}}), ContractError);
  CHECK_THROWS_AS(adam.step(s, {{"a", Tensor::scalar(1)}}), ShapeError);
  CHECK(adam.steps() == 0);
  CHECK(a.value == Tensor::matrix(1, 2, {0.1, 0.2}));
}

TEST_CASE("float32 mode rounds updated parameters") {
  PrecisionGuard g(Precision::kFloat32);
  ParamStore s;
  Parameter& p = s.add("p", "g", Tensor::scalar(0.3));
  Adam adam;
  adam.step(s, {{"p", Tensor::scalar(0.7)}});
  const double v = p.value.item();
  CHECK(static_cast<double>(static_cast<float>(v)) == v);
}
