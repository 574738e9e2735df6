#include <doctest.h>

#include <cmath>
#include <limits>

#include "rgae/errors.hpp"
#include "rgae/kernels.hpp"
#include "rgae/numdiff.hpp"
#include "rgae/optim.hpp"
#include "support.hpp"

using namespace rgae;

namespace {

DenseMatrix dense_product(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

SparseMatrix random_sparse(Rng& rng, std::size_t r, std::size_t c, double density) {
  std::vector<Triplet> t;
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      if (rng.uniform() < density) t.push_back({i, j, rng.normal()});
  return SparseMatrix::from_triplets(r, c, t);
}

}  // namespace

TEST_CASE("spmm: identity, zero and dense oracle") {
  Rng rng(3);
  const DenseMatrix d = test::random_matrix(rng, 6, 2);
  CHECK(kernels::spmm(SparseMatrix::identity(6), d) == d);
  CHECK(max_abs_diff(kernels::spmm(SparseMatrix(6, 6), d), DenseMatrix(6, 2)) == 0.0);
  const SparseMatrix s = random_sparse(rng, 6, 6, 0.3);
  CHECK(max_abs_diff(kernels::spmm(s, d), dense_product(s.to_dense(), d)) < 1e-12);
  CHECK_THROWS_AS(kernels::spmm(s, DenseMatrix(5, 2)), ShapeError);
}

TEST_CASE("spmm distributes over addition") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const SparseMatrix s = random_sparse(rng, 9, 7, 0.3);
    const DenseMatrix a = test::random_matrix(rng, 7, 3);
    const DenseMatrix b = test::random_matrix(rng, 7, 3);
    CHECK(max_abs_diff(kernels::spmm(s, a + b), kernels::spmm(s, a) + kernels::spmm(s, b)) < 1e-12);
  }
}

TEST_CASE("parallel kernels agree with the serial reference") {
  Rng rng(5);
  const SparseMatrix s = random_sparse(rng, 40, 30, 0.1);
  const DenseMatrix a = test::random_matrix(rng, 30, 4);
  CHECK(kernels::spmm(s, a) == kernels::serial::spmm(s, a));
  const DenseMatrix x = test::random_matrix(rng, 13, 6);
  const DenseMatrix y = test::random_matrix(rng, 6, 5);
  const DenseMatrix w = test::random_matrix(rng, 13, 5);
  CHECK(max_abs_diff(kernels::gemm(x, y), kernels::serial::gemm(x, y)) < 1e-13);
  CHECK(max_abs_diff(kernels::gemm_tn(x, w), kernels::serial::gemm_tn(x, w)) < 1e-13);
  CHECK(max_abs_diff(kernels::gemm_nt(x, x), kernels::serial::gemm_nt(x, x)) < 1e-13);

  // sizes straddling the BCE tile width, odd and even tile counts
  for (std::size_t n : {5, 128, 129, 300, 520}) {
    const DenseMatrix z = test::random_matrix(rng, n, 4, 0.5);
    const SparseMatrix target = adjacency_from_edges(n, test::random_edges(rng, n, 0.05));
    for (BceWeighting w : {BceWeighting::plain, BceWeighting::pos_weighted}) {
      const BceResult p = kernels::bce_all_pairs(z, target, w, true);
      const BceResult r = kernels::serial::bce_all_pairs(z, target, w, true);
      CHECK(std::abs(p.loss - r.loss) <= 1e-12 * std::abs(r.loss));
      CHECK(relative_error(p.grad_z, r.grad_z) < 1e-12);
    }
  }
}

TEST_CASE("bce kernel rejects bad targets") {
  const DenseMatrix z(3, 2, 0.1);
  CHECK_THROWS_AS(kernels::bce_all_pairs(z, SparseMatrix(2, 2), BceWeighting::plain, false), ShapeError);
  const SparseMatrix asym = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}});
  CHECK_THROWS_AS(kernels::bce_all_pairs(z, asym, BceWeighting::plain, false), ShapeError);
}

TEST_CASE("pos-weighted scaling") {
  const BceScaling s = pos_weighted_scaling(10, 20.0);
  CHECK(s.pos_weight == doctest::Approx(80.0 / 20.0));
  CHECK(s.norm == doctest::Approx(100.0 / 160.0));
}

TEST_CASE("adam: zero gradient, first step, trajectory oracle") {
  {
    AdamState st({}, 2, 2);
    DenseMatrix p = DenseMatrix::from_rows({{1.0, -2.0}, {3.0, 0.5}});
    const DenseMatrix before = p;
    adam_step(st, p, DenseMatrix(2, 2));
    CHECK(p == before);
    CHECK(st.step == 1);
  }
  {
    AdamState st({}, 1, 1);
    DenseMatrix p(1, 1, 0.0);
    adam_step(st, p, DenseMatrix(1, 1, 1.0));
    CHECK(p(0, 0) == doctest::Approx(-0.01).epsilon(1e-6));
  }
  {
    // f(x) = x^2 from x = 1; oracle written with the folded step size
    AdamState st({}, 1, 1);
    DenseMatrix p(1, 1, 1.0);
    double x = 1.0, m = 0.0, v = 0.0;
    const double lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    for (int t = 1; t <= 10; ++t) {
      adam_step(st, p, DenseMatrix(1, 1, 2.0 * p(0, 0)));
      const double g = 2.0 * x;
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      const double c2 = std::sqrt(1 - std::pow(b2, t));
      const double step = lr * c2 / (1 - std::pow(b1, t));
      x -= step * m / (std::sqrt(v) + eps * c2);
      CHECK(std::abs(p(0, 0) - x) < 1e-12);
    }
  }
}

TEST_CASE("adam rejects non-finite gradients and leaves params untouched") {
  AdamState st({}, 1, 2);
  DenseMatrix p(1, 2, 1.0);
  DenseMatrix g(1, 2, 0.0);
  g(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(adam_step(st, p, g), NumericsError);
  CHECK(p == DenseMatrix(1, 2, 1.0));
  CHECK_THROWS_AS(adam_step(st, p, DenseMatrix(2, 2)), ShapeError);
}

TEST_CASE("finite differences") {
  Rng rng(6);
  const DenseMatrix x = test::random_matrix(rng, 3, 4);
  auto sum = [](const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.values()) s += v;
    return s;
  };
  CHECK(max_abs_diff(finite_diff_grad(sum, x), DenseMatrix(3, 4, 1.0)) < 1e-9);
  CHECK(max_abs_diff(finite_diff_grad([](const DenseMatrix&) { return 0.0; }, x), DenseMatrix(3, 4)) == 0.0);
  auto sq = [](const DenseMatrix& m) { return frobenius_norm(m) * frobenius_norm(m); };
  CHECK(max_abs_diff(finite_diff_grad(sq, x), 2.0 * x) < 1e-6);

  // O(h^2): shrinking h by 10 shrinks the error of a cubic by about 100
  auto cubic = [](const DenseMatrix& m) { return m(0, 0) * m(0, 0) * m(0, 0); };
  const DenseMatrix x1(1, 1, 0.7);
  const double exact = 3 * 0.49;
  const double e1 = std::abs(finite_diff_grad(cubic, x1, 1e-2)(0, 0) - exact);
  const double e2 = std::abs(finite_diff_grad(cubic, x1, 1e-3)(0, 0) - exact);
  CHECK(e1 / e2 == doctest::Approx(100.0).epsilon(0.01));

  CHECK_THROWS_AS(finite_diff_grad(sum, x, 0.0), RangeError);
  CHECK_THROWS_AS(finite_diff_grad([](const DenseMatrix&) { return std::nan(""); }, x), NumericsError);
}

TEST_CASE("cosine") {
  const std::vector<double> u{1.0, 2.0, -3.0};
  const std::vector<double> neg{-1.0, -2.0, 3.0};
  CHECK(cosine(u, u).value == 1.0);
  CHECK(cosine(u, neg).value == -1.0);
  const std::vector<double> e1{1.0, 0.0};
  const std::vector<double> e2{0.0, 1.0};
  CHECK(cosine(e1, e2).value == 0.0);
  const Cosine z = cosine(std::vector<double>{0.0, 0.0}, e1);
  CHECK(z.degenerate);
  CHECK(z.value == 0.0);

  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(5), b(5), as(5), bs(5);
    const double alpha = rng.uniform(0.01, 100.0), beta = rng.uniform(0.01, 100.0);
    for (int k = 0; k < 5; ++k) {
      a[k] = rng.normal();
      b[k] = rng.normal();
      as[k] = alpha * a[k];
      bs[k] = beta * b[k];
    }
    const double c = cosine(a, b).value;
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(std::abs(cosine(as, bs).value - c) < 1e-12);
  }
}
