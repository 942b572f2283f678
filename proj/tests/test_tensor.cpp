#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dscnn/rng.hpp"
#include "dscnn/tensor.hpp"

using namespace dscnn;

namespace {

// naive triple-loop reference for matmul
Tensor naive_matmul(const Tensor& a, const Tensor& b) {
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out(Shape{m, n});
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      out[i * n + j] = acc;
    }
  }
  return out;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape() == b.shape());
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("zeros fills every element") {
  const Tensor a = Tensor::zeros(Shape{2, 2});
  CHECK(a.shape() == Shape{2, 2});
  for (int64_t i = 0; i < 4; ++i) CHECK(a[i] == 0.0);

  const Tensor scalar = Tensor::zeros(Shape{});
  CHECK(scalar.rank() == 0);
  CHECK(scalar.numel() == 1);
  CHECK(scalar.item() == 0.0);

  const Tensor vec = Tensor::zeros(Shape{3});
  CHECK(vec.numel() == 3);
  for (int64_t i = 0; i < 3; ++i) CHECK(vec[i] == 0.0);
}

TEST_CASE("shape rejects non-positive axes") {
  CHECK_THROWS_AS(Shape{0}, ShapeError);
  CHECK_THROWS_AS((Shape{2, -1}), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("elementwise arithmetic") {
  const Tensor a(Shape{2}, {1, 2});
  const Tensor b(Shape{2}, {3, 4});
  const Tensor sum = add(a, b);
  CHECK(sum[0] == 4.0);
  CHECK(sum[1] == 6.0);

  const Tensor x(Shape{3}, {1.5, -2.0, 7.0});
  const Tensor annihilated = scale(x, 0.0);
  for (int64_t i = 0; i < 3; ++i) CHECK(annihilated[i] == 0.0);

  const Tensor diff = sub(x, x);
  for (int64_t i = 0; i < 3; ++i) CHECK(diff[i] == 0.0);

  const Tensor prod = mul(a, b);
  CHECK(prod[0] == 3.0);
  CHECK(prod[1] == 8.0);

  CHECK_THROWS_AS(add(a, x), ShapeError);
}

TEST_CASE("matmul basics") {
  const Tensor eye(Shape{2, 2}, {1, 0, 0, 1});
  const Tensor m(Shape{2, 2}, {1, 2, 3, 4});
  CHECK(max_abs_diff(matmul(eye, m), m) == 0.0);

  const Tensor row(Shape{1, 2}, {1, 2});
  const Tensor col(Shape{2, 1}, {3, 4});
  CHECK(matmul(row, col).item() == 11.0);

  CHECK_THROWS_AS(matmul(row, row), ShapeError);
  CHECK_THROWS_AS(matmul(Tensor::zeros(Shape{3}), m), ShapeError);
}

TEST_CASE("matmul matches the naive oracle") {
  Rng rng(7);
  const Tensor a = uniform_tensor(rng, Shape{4, 5}, -1, 1);
  const Tensor b = uniform_tensor(rng, Shape{5, 3}, -1, 1);
  CHECK(max_abs_diff(matmul(a, b), naive_matmul(a, b)) <= 1e-12);
}

TEST_CASE("matmul associativity on random triples") {
  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = uniform_tensor(rng, Shape{3, 4}, -1, 1);
    const Tensor b = uniform_tensor(rng, Shape{4, 5}, -1, 1);
    const Tensor c = uniform_tensor(rng, Shape{5, 2}, -1, 1);
    const Tensor left = matmul(matmul(a, b), c);
    const Tensor right = matmul(a, matmul(b, c));
    for (int64_t i = 0; i < left.numel(); ++i) {
      const double denom = std::max(1.0, std::abs(left[i]));
      CHECK(std::abs(left[i] - right[i]) / denom <= 1e-9);
    }
  }
}

TEST_CASE("reductions") {
  const Tensor pm(Shape{2}, {-1, 1});
  CHECK(reduce_mean(pm, {0}).item() == 0.0);
  CHECK(reduce_var(pm, {0}).item() == 1.0);

  const Tensor c = Tensor::full(Shape{3, 2}, 4.5);
  const Tensor v = reduce_var(c, {0, 1});
  CHECK(v.item() == 0.0);

  CHECK_THROWS_AS(reduce_mean(pm, {}), ShapeError);
  CHECK_THROWS_AS(reduce_mean(pm, {1}), ShapeError);
}

TEST_CASE("reduction over one axis keeps the others") {
  const Tensor m(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor rows = reduce_mean(m, {1});
  CHECK(rows.shape() == Shape{2});
  CHECK(rows[0] == 2.0);
  CHECK(rows[1] == 5.0);
  const Tensor cols = reduce_mean(m, {0});
  CHECK(cols.shape() == Shape{3});
  CHECK(cols[0] == 2.5);
}

TEST_CASE("moments match a naive single-pass loop") {
  Rng rng(99);
  const Tensor a = uniform_tensor(rng, Shape{4, 5, 3}, -2, 2);
  double sum = 0.0, sumsq = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    sum += a[i];
    sumsq += a[i] * a[i];
  }
  const double n = static_cast<double>(a.numel());
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::abs(reduce_mean(a, {0, 1, 2}).item() - mean) <= 1e-12 * std::max(1.0, std::abs(mean)));
  CHECK(std::abs(reduce_var(a, {0, 1, 2}).item() - var) <= 1e-12 * std::max(1.0, var));
}

TEST_CASE("flatten is the row-major linearization") {
  const Tensor m(Shape{2, 2}, {1, 2, 3, 4});
  const Tensor f = flatten(m);
  CHECK(f.shape() == Shape{4});
  for (int64_t i = 0; i < 4; ++i) CHECK(f[i] == static_cast<double>(i + 1));

  const Tensor v(Shape{3}, {5, 6, 7});
  CHECK(max_abs_diff(flatten(v), v) == 0.0);

  const Tensor t(Shape{2, 1, 2}, {10, 11, 12, 13});
  const Tensor ft = flatten(t);
  for (int64_t i = 0; i < 4; ++i) CHECK(ft[i] == static_cast<double>(10 + i));
}

TEST_CASE("flatten/reshape round-trips values") {
  Rng rng(5);
  const Tensor a = uniform_tensor(rng, Shape{2, 3, 4}, -1, 1);
  const Tensor back = reshape(flatten(a), Shape{4, 6});
  for (int64_t i = 0; i < a.numel(); ++i) CHECK(back[i] == a[i]);
  CHECK_THROWS_AS(reshape(a, Shape{5}), ShapeError);
}
