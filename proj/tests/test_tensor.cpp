#include <cmath>
#include <vector>

#include <doctest.h>

#include "corpusgen/errors.hpp"
#include "corpusgen/rng.hpp"
#include "corpusgen/tensor.hpp"

using namespace corpusgen;

namespace {

Mat random_mat(SplitRng &rng, int rows, int cols) {
  Mat m(rows, cols);
  for (double &x : m.a) x = rng.uniform(-2.0, 2.0);
  return m;
}

Vec random_vec(SplitRng &rng, int n) {
  Vec v(static_cast<std::size_t>(n));
  for (double &x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

} // namespace

TEST_CASE("matrix storage is row-major") {
  Mat m(2, 3);
  m.at(0, 0) = 1;
  m.at(0, 2) = 3;
  m.at(1, 0) = 4;
  CHECK(m.a[0] == 1);
  CHECK(m.a[2] == 3);
  CHECK(m.a[3] == 4);
}

TEST_CASE("matvec against a hand-computed case") {
  Mat m(2, 3);
  double vals[] = {1, 2, 3, 4, 5, 6};
  m.a.assign(vals, vals + 6);
  Vec v = {1, -1, 2};
  Vec out = matvec(m, v);
  REQUIRE(out.size() == 2);
  CHECK(out[0] == doctest::Approx(5.0).epsilon(1e-15));  // 1-2+6
  CHECK(out[1] == doctest::Approx(11.0).epsilon(1e-15)); // 4-5+12
}

TEST_CASE("matvec_t multiplies by the transpose") {
  Mat m(2, 3);
  double vals[] = {1, 2, 3, 4, 5, 6};
  m.a.assign(vals, vals + 6);
  Vec v = {2, -1};
  Vec out = matvec_t(m, v);
  REQUIRE(out.size() == 3);
  CHECK(out[0] == doctest::Approx(-2.0).epsilon(1e-15)); // 2*1 - 1*4
  CHECK(out[1] == doctest::Approx(-1.0).epsilon(1e-15)); // 2*2 - 1*5
  CHECK(out[2] == doctest::Approx(0.0).epsilon(1e-15));  // 2*3 - 1*6
}

TEST_CASE("add_outer accumulates a scaled outer product") {
  Mat m(2, 2, 1.0);
  Vec u = {1, 2};
  Vec v = {3, 4};
  add_outer(m, u, v, 0.5);
  CHECK(m.at(0, 0) == doctest::Approx(1 + 0.5 * 3));
  CHECK(m.at(0, 1) == doctest::Approx(1 + 0.5 * 4));
  CHECK(m.at(1, 0) == doctest::Approx(1 + 0.5 * 6));
  CHECK(m.at(1, 1) == doctest::Approx(1 + 0.5 * 8));
}

TEST_CASE("parallel kernels reproduce the serial reference bit for bit") {
  SplitRng rng(31);
  for (int size : {1, 7, 64, 193}) {
    Mat m = random_mat(rng, size, size + 3);
    Vec v = random_vec(rng, size + 3);
    Vec vt = random_vec(rng, size);
    CHECK(matvec(m, v) == serial::matvec(m, v));
    CHECK(matvec_t(m, vt) == serial::matvec_t(m, vt));
    Mat a = m, b = m;
    add_outer(a, vt, v, 0.25);
    serial::add_outer(b, vt, v, 0.25);
    CHECK(a.a == b.a);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  Mat m(2, 3);
  Vec wrong = {1, 2};
  CHECK_THROWS_AS(matvec(m, wrong), DimensionError);
  Vec wrong_t = {1, 2, 3};
  CHECK_THROWS_AS(matvec_t(m, wrong_t), DimensionError);
  CHECK_THROWS_AS(add_outer(m, wrong_t, wrong_t), DimensionError);
  CHECK_THROWS_AS(dot(wrong, wrong_t), DimensionError);
}

TEST_CASE("softmax matches the textbook example") {
  Vec out = softmax({1.0, 2.0, 3.0});
  CHECK(out[0] == doctest::Approx(0.09003057317038046).epsilon(1e-14));
  CHECK(out[1] == doctest::Approx(0.24472847105479767).epsilon(1e-14));
  CHECK(out[2] == doctest::Approx(0.6652409557748219).epsilon(1e-14));
  double sum = out[0] + out[1] + out[2];
  CHECK(std::abs(sum - 1.0) < 1e-15);
}

TEST_CASE("softmax survives large offsets unchanged") {
  Vec a = softmax({1.0, 2.0, 3.0});
  Vec b = softmax({1001.0, 1002.0, 1003.0});
  for (std::size_t i = 0; i < 3; ++i)
    CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  Vec c = softmax({1000.0, 1000.0});
  CHECK(c[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("elementwise ops behave") {
  Vec s = sigmoid({0.0});
  CHECK(s[0] == doctest::Approx(0.5).epsilon(1e-15));
  Vec t = tanh_elem({0.0});
  CHECK(t[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(hadamard({2, 3}, {4, 5}) == Vec{8, 15});
  CHECK(add({1, 2}, {3, 4}) == Vec{4, 6});
  CHECK(concat({1}, {2, 3}) == Vec{1, 2, 3});
  CHECK(dot({1, 2, 3}, {4, 5, 6}) == doctest::Approx(32.0));
  Vec y = {1, 1};
  axpy(y, 2.0, {3, 4});
  CHECK(y == Vec{7, 9});
  Vec z = {2, 4};
  scale_inplace(z, 0.5);
  CHECK(z == Vec{1, 2});
}

TEST_CASE("all_finite flags bad values") {
  CHECK(all_finite(Vec{1.0, -2.0, 0.0}));
  CHECK_FALSE(all_finite(Vec{1.0, std::nan("")}));
  CHECK_FALSE(all_finite(Vec{1.0, INFINITY}));
  Mat m(2, 2, 1.0);
  CHECK(all_finite(m));
  m.at(1, 1) = -INFINITY;
  CHECK_FALSE(all_finite(m));
}

TEST_CASE("finite-difference checker agrees with closed-form gradients") {
  // f(x) = sum x^2, grad = 2x
  auto f = [](const Vec &x) {
    double s = 0;
    for (double v : x) s += v * v;
    return s;
  };
  Vec point = {0.3, -1.2, 2.0};
  Vec analytic = {0.6, -2.4, 4.0};
  double err = grad_check(f, analytic, point, 1e-5);
  CHECK(err < 1e-8);

  // linear form: grad is the coefficient vector everywhere
  Vec c = {2.0, -3.0, 0.5};
  auto g = [&c](const Vec &x) { return dot(c, x); };
  CHECK(grad_check(g, c, point, 1e-5) < 1e-8);

  // a wrong gradient is caught
  Vec wrong = {0.6, -2.4, 3.0};
  CHECK(grad_check(f, wrong, point, 1e-5) > 1e-2);
}
