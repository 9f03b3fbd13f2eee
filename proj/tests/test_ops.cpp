#include <doctest.h>

#include <cmath>
#include <vector>

#include "simple/errors.hpp"
#include "simple/ops.hpp"
#include "simple/tensor.hpp"

using namespace simple;

TEST_CASE("elementwise ops enforce exact shape match") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  const Tensor b = Tensor::from({4}, {1, 2, 3, 4});
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(sub(a, b), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
}

TEST_CASE("reshape preserves data and rejects size changes") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor r = reshape(a, {3, 2});
  CHECK(r.shape() == std::vector<std::size_t>{3, 2});
  for (std::size_t i = 0; i < 6; ++i) CHECK(r.at(i) == a.at(i));
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);
}

TEST_CASE("matmul computes a small product and checks inner dims") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12});
  const Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<std::size_t>{2, 2});
  CHECK(c.at(0) == 58.0);
  CHECK(c.at(1) == 64.0);
  CHECK(c.at(2) == 139.0);
  CHECK(c.at(3) == 154.0);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("sum and mean reduce to scalars") {
  const Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(sum(a).item() == 10.0);
  CHECK(mean(a).item() == 2.5);
  CHECK(sum(a).shape() == std::vector<std::size_t>{1});
}

TEST_CASE("add_rowvec broadcasts over rows") {
  const Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor v = Tensor::from({3}, {10, 20, 30});
  const Tensor r = add_rowvec(a, v);
  CHECK(r.at(0) == 11.0);
  CHECK(r.at(5) == 36.0);
  CHECK_THROWS_AS(add_rowvec(a, Tensor::from({2}, {1, 2})), ShapeError);
}

TEST_CASE("relu and clamp_min") {
  const Tensor a = Tensor::from({4}, {-1.0, 0.0, 0.5, 2.0});
  const Tensor r = relu(a);
  CHECK(r.at(0) == 0.0);
  CHECK(r.at(1) == 0.0);
  CHECK(r.at(2) == 0.5);
  const Tensor c = clamp_min(a, 0.25);
  CHECK(c.at(0) == 0.25);
  CHECK(c.at(2) == 0.5);
}

TEST_CASE("softmax rows sum to one and match the closed form") {
  const Tensor a = Tensor::from({2, 2}, {0.0, 1.0, 3.0, 3.0});
  const Tensor s = softmax_rows(a);
  const double e = std::exp(1.0);
  CHECK(s.at(0) == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
  CHECK(s.at(1) == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(s.at(2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0) + s.at(1) == doctest::Approx(1.0).epsilon(1e-14));
  // max-shift must keep huge logits finite
  const Tensor big = softmax_rows(Tensor::from({1, 2}, {1000.0, 1000.0}));
  CHECK(big.at(0) == doctest::Approx(0.5));
}

TEST_CASE("argmax_rows breaks ties to the lowest index") {
  const Tensor a = Tensor::from({3, 3}, {1, 3, 2, 5, 5, 4, 0, 0, 0});
  const auto idx = argmax_rows(a);
  CHECK(idx == std::vector<std::size_t>{1, 0, 0});
}

TEST_CASE("conv2d matches a hand-computed 3x3 case") {
  // 1x1x3x3 image, single 1x1x3x3 filter, pad 1: center output sums the
  // whole image, corner output sums the overlapping 2x2 block.
  std::vector<double> img = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  const Tensor x = Tensor::from({1, 1, 3, 3}, img);
  const Tensor w = Tensor::full({1, 1, 3, 3}, 1.0);
  const Tensor y = conv2d(x, w, 1, 1);
  CHECK(y.shape() == std::vector<std::size_t>{1, 1, 3, 3});
  CHECK(y.at(4) == 45.0);                  // center: all nine
  CHECK(y.at(0) == 1.0 + 2 + 4 + 5);       // top-left corner
  CHECK(y.at(8) == 5.0 + 6 + 8 + 9);       // bottom-right corner
}

TEST_CASE("conv2d stride and output-size contract") {
  const Tensor x = Tensor::zeros({1, 1, 7, 7});
  const Tensor w = Tensor::zeros({1, 1, 3, 3});
  CHECK(conv2d(x, w, 2, 0).shape() == std::vector<std::size_t>{1, 1, 3, 3});
  // (7 - 3) not divisible by 3
  CHECK_THROWS_AS(conv2d(x, w, 3, 0), ConfigError);
}

TEST_CASE("add_chanvec broadcasts per channel") {
  const Tensor x = Tensor::zeros({1, 2, 2, 2});
  const Tensor v = Tensor::from({2}, {1.0, -1.0});
  const Tensor y = add_chanvec(x, v);
  CHECK(y.at(0) == 1.0);
  CHECK(y.at(3) == 1.0);
  CHECK(y.at(4) == -1.0);
  CHECK(y.at(7) == -1.0);
}

TEST_CASE("maxpool2x2 picks window maxima and requires even sides") {
  const Tensor x = Tensor::from({1, 1, 2, 4}, {1, 5, 2, 0, 3, 4, 1, 9});
  const Tensor y = maxpool2x2(x);
  CHECK(y.shape() == std::vector<std::size_t>{1, 1, 1, 2});
  CHECK(y.at(0) == 5.0);
  CHECK(y.at(1) == 9.0);
  CHECK_THROWS_AS(maxpool2x2(Tensor::zeros({1, 1, 3, 4})), ShapeError);
}

TEST_CASE("accumulating microkernels never clear the output") {
  // C starts nonzero; mm_nn_acc must add onto it.
  const double A[2] = {1.0, 2.0};  // 1x2
  const double B[2] = {3.0, 4.0};  // 2x1
  double C[1] = {100.0};
  kernels::mm_nn_acc(A, B, C, 1, 2, 1);
  CHECK(C[0] == 111.0);
}

TEST_CASE("im2col and col2im round-trip the interior") {
  // 1 channel 2x2, 1x1 kernel, stride 1, no padding: cols is the image.
  const double img[4] = {1, 2, 3, 4};
  double cols[4] = {0, 0, 0, 0};
  kernels::im2col(img, 1, 2, 2, 1, 1, 1, 0, cols);
  for (int i = 0; i < 4; ++i) CHECK(cols[i] == img[i]);
  double back[4] = {0, 0, 0, 0};
  kernels::col2im_acc(cols, 1, 2, 2, 1, 1, 1, 0, back);
  for (int i = 0; i < 4; ++i) CHECK(back[i] == img[i]);
}
