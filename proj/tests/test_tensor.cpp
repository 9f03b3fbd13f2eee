#include <doctest.h>

#include <cmath>

#include "simple/errors.hpp"
#include "simple/ops.hpp"
#include "simple/tensor.hpp"

using namespace simple;

TEST_CASE("construction validates shape and finiteness") {
  CHECK_THROWS_AS(Tensor::from({2, 3}, {1.0, 2.0}), ShapeError);
  CHECK_THROWS_AS(Tensor::from({2}, {1.0, std::nan("")}), ValueError);
  CHECK_THROWS_AS(Tensor::from({2}, {1.0, INFINITY}), ValueError);
  const Tensor z = Tensor::zeros({2, 2});
  CHECK(z.size() == 4);
  CHECK(z.at(3) == 0.0);
  const Tensor f = Tensor::full({3}, 2.5);
  CHECK(f.at(1) == 2.5);
  const Tensor s = Tensor::scalar(-1.0);
  CHECK(s.item() == -1.0);
  CHECK(s.size() == 1);
}

TEST_CASE("item and at guard their domains") {
  const Tensor m = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK_THROWS_AS((void)m.item(), ContractError);
  CHECK_THROWS_AS((void)m.at(4), ShapeError);
  CHECK(m.at(2) == 3.0);
}

TEST_CASE("copying shares storage; tensors default to detached") {
  const Tensor a = Tensor::from({2}, {1.0, 2.0});
  const Tensor b = a;
  CHECK(a.shared_data().get() == b.shared_data().get());
  CHECK_FALSE(a.tracked());
}

TEST_CASE("backward computes fan-out gradients") {
  Tape tape;
  const Tensor a = tape.watch(Tensor::from({2}, {3.0, -2.0}));
  const Tensor b = tape.watch(Tensor::from({2}, {1.0, 4.0}));
  // y = sum(a*a + b)
  const Tensor y = sum(add(mul(a, a), b));
  const GradientMap g = backward(y);
  CHECK(g.at(a)[0] == doctest::Approx(6.0));
  CHECK(g.at(a)[1] == doctest::Approx(-4.0));
  CHECK(g.at(b)[0] == doctest::Approx(1.0));
  CHECK(g.at(b)[1] == doctest::Approx(1.0));
}

TEST_CASE("backward rejects detached and non-scalar losses") {
  const Tensor d = Tensor::scalar(1.0);
  CHECK_THROWS_AS(backward(d), ContractError);
  Tape tape;
  const Tensor a = tape.watch(Tensor::from({2}, {1.0, 2.0}));
  CHECK_THROWS_AS(backward(add(a, a)), ContractError);
}

TEST_CASE("gradients do not flow into detached views") {
  Tape tape;
  const Tensor a = tape.watch(Tensor::from({2}, {1.0, 2.0}));
  const Tensor frozen = a.detached();
  const Tensor y = sum(mul(a, frozen));
  const GradientMap g = backward(y);
  // d/da (a * const) = const, not 2a
  CHECK(g.at(a)[0] == doctest::Approx(1.0));
  CHECK(g.at(a)[1] == doctest::Approx(2.0));
  CHECK_FALSE(frozen.tracked());
}

TEST_CASE("unreached tensors report no gradient") {
  Tape tape;
  const Tensor a = tape.watch(Tensor::from({1}, {1.0}));
  const Tensor b = tape.watch(Tensor::from({1}, {2.0}));
  const GradientMap g = backward(sum(a));
  CHECK(g.has(a));
  CHECK_FALSE(g.has(b));
  CHECK_THROWS_AS((void)g.at(b), ContractError);
}

TEST_CASE("tensors from different tapes cannot mix") {
  Tape t1, t2;
  const Tensor a = t1.watch(Tensor::from({1}, {1.0}));
  const Tensor b = t2.watch(Tensor::from({1}, {2.0}));
  CHECK_THROWS_AS(add(a, b), ContractError);
}

TEST_CASE("ops refuse to emit non-finite values") {
  CHECK_THROWS_AS(log_t(Tensor::from({1}, {0.0})), ValueError);
  CHECK_THROWS_AS(sqrt_t(Tensor::from({1}, {-1.0})), ValueError);
  const Tensor big = Tensor::full({1}, 1e308);
  CHECK_THROWS_AS(add(big, big), ValueError);
}

TEST_CASE("shape_str formats dims") {
  CHECK(shape_str({2, 3, 4}) == "[2,3,4]");
  CHECK(shape_size({2, 3, 4}) == 24);
}
