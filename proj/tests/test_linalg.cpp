#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "oracles.hpp"
#include "stabilab/learners.hpp"
#include "stabilab/linalg.hpp"
#include "stabilab/rng.hpp"

using namespace stabilab;

namespace {

Dataset random_dataset(Eigen::Index m, Eigen::Index d, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd x(m, d);
  Eigen::VectorXi y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.next_normal();
    y(i) = rng.next_unit() < 0.5 ? 0 : 1;
  }
  return Dataset(x, y);
}

SymmetricMatrix random_symmetric(Eigen::Index n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = rng.next_normal();
  }
  return SymmetricMatrix::from_dense(0.5 * (a + a.transpose()));
}

}  // namespace

TEST_CASE("packed storage round trips and stays symmetric") {
  SymmetricMatrix m(3);
  m.set(0, 1, 2.5);
  m.set(2, 0, -1.0);
  CHECK(m(1, 0) == 2.5);
  CHECK(m(0, 2) == -1.0);
  const Eigen::MatrixXd dense = m.dense();
  CHECK(dense == dense.transpose());
  CHECK(SymmetricMatrix::from_dense(dense).dense() == dense);

  Eigen::MatrixXd skew(2, 2);
  skew << 0, 1, -1, 0;
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(skew), std::invalid_argument);
  Eigen::MatrixXd nan2 = Eigen::MatrixXd::Constant(2, 2, std::nan(""));
  CHECK_THROWS_AS(SymmetricMatrix::from_dense(nan2), std::invalid_argument);
}

TEST_CASE("hessian of one example at theta = 0") {
  Eigen::MatrixXd x(1, 2);
  x << 1, 1;
  Eigen::VectorXi y(1);
  y << 1;
  const Dataset d(x, y);
  const SymmetricMatrix h =
      cross_entropy_hessian(d, Eigen::VectorXd::Zero(2), 0.0);
  CHECK(h(0, 0) == 0.25);
  CHECK(h(0, 1) == 0.25);
  CHECK(h(1, 1) == 0.25);
}

TEST_CASE("the penalty adds exactly to the diagonal") {
  const Dataset d = random_dataset(12, 4, 3);
  const Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  const SymmetricMatrix h0 = cross_entropy_hessian(d, theta, 0.0);
  const SymmetricMatrix h5 = cross_entropy_hessian(d, theta, 5.0);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = i; j < 4; ++j) {
      if (i == j) {
        CHECK(h5(i, j) - h0(i, j) == doctest::Approx(5.0).epsilon(1e-14));
      } else {
        CHECK(h5(i, j) == h0(i, j));
      }
    }
  }
}

TEST_CASE("hessian matches finite differences of the gradient") {
  const Dataset d = random_dataset(30, 5, 8);
  SplitMix64 rng(12);
  Eigen::VectorXd theta(6);  // bias convention, matching lr_gradient
  for (Eigen::Index j = 0; j < 6; ++j) theta(j) = 0.4 * rng.next_normal();
  const double lambda = 0.3;
  const SymmetricMatrix h = cross_entropy_hessian(d, theta, lambda);
  const Eigen::MatrixXd fd = oracles::fd_jacobian(
      [&](const Eigen::VectorXd& t) { return lr_gradient(d, t, lambda); },
      theta);
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double scale = std::max(1e-6, std::abs(fd(i, j)));
      CHECK(std::abs(h(i, j) - fd(i, j)) / scale <= 1e-4);
    }
  }
}

TEST_CASE("smallest eigenvalue on small fixed matrices") {
  Eigen::MatrixXd diag = Eigen::Vector2d(2.0, 3.0).asDiagonal();
  CHECK(smallest_eigenvalue(SymmetricMatrix::from_dense(diag)) ==
        doctest::Approx(2.0).epsilon(1e-12));

  Eigen::MatrixXd m(2, 2);
  m << 2, 1, 1, 2;
  CHECK(smallest_eigenvalue(SymmetricMatrix::from_dense(m)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd rank1(2, 2);
  rank1 << 0.25, 0.25, 0.25, 0.25;  // eigenvalues {0, 0.5}
  CHECK(std::abs(smallest_eigenvalue(SymmetricMatrix::from_dense(rank1))) <=
        1e-10);

  SymmetricMatrix one(1);
  one.set(0, 0, -4.0);
  CHECK(smallest_eigenvalue(one) == -4.0);
}

TEST_CASE("jacobi agrees with the library eigensolver") {
  for (const Eigen::Index n : {2, 3, 5, 11, 30}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const SymmetricMatrix m = random_symmetric(n, 100 * n + seed);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.dense());
      const double expected = solver.eigenvalues().minCoeff();
      const double scale = std::max(1.0, m.frobenius_norm());
      CHECK(std::abs(smallest_eigenvalue(m) - expected) <= 1e-9 * scale);
    }
  }
}

TEST_CASE("rayleigh quotients never undercut the smallest eigenvalue") {
  const SymmetricMatrix m = random_symmetric(7, 55);
  const double lo = smallest_eigenvalue(m);
  const Eigen::MatrixXd dense = m.dense();
  SplitMix64 rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd v(7);
    for (Eigen::Index j = 0; j < 7; ++j) v(j) = rng.next_normal();
    v.normalize();
    CHECK(v.dot(dense * v) >= lo - 1e-8);
  }
}

TEST_CASE("shift identity") {
  SplitMix64 rng(31);
  const SymmetricMatrix m = random_symmetric(6, 17);
  const double base = smallest_eigenvalue(m);
  for (int trial = 0; trial < 10; ++trial) {
    const double c = 10.0 * rng.next_unit();
    Eigen::MatrixXd shifted = m.dense();
    shifted.diagonal().array() += c;
    const double lo = smallest_eigenvalue(SymmetricMatrix::from_dense(shifted));
    CHECK(std::abs(lo - (base + c)) <= 1e-8);
  }
}

TEST_CASE("the cross-entropy hessian is positive semidefinite") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = random_dataset(15, 4, 60 + seed);
    SplitMix64 rng(seed);
    Eigen::VectorXd theta(5);
    for (Eigen::Index j = 0; j < 5; ++j) theta(j) = rng.next_normal();
    CHECK(smallest_eigenvalue(cross_entropy_hessian(d, theta, 0.0)) >= -1e-10);
  }
}

TEST_CASE("jacobi is invariant under symmetric permutation") {
  const SymmetricMatrix m = random_symmetric(8, 23);
  const double base = smallest_eigenvalue(m);
  SplitMix64 rng(2);
  Eigen::VectorXi perm(8);
  std::vector<int> order{0, 1, 2, 3, 4, 5, 6, 7};
  for (int j = 7; j > 0; --j) {
    std::swap(order[static_cast<std::size_t>(j)],
              order[rng.next_below(static_cast<std::uint64_t>(j) + 1)]);
  }
  Eigen::MatrixXd permuted(8, 8);
  const Eigen::MatrixXd dense = m.dense();
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      permuted(i, j) = dense(order[static_cast<std::size_t>(i)],
                             order[static_cast<std::size_t>(j)]);
    }
  }
  const double lo = smallest_eigenvalue(SymmetricMatrix::from_dense(permuted));
  CHECK(std::abs(lo - base) <= 1e-8 * std::max(1.0, m.frobenius_norm()));
  (void)perm;
}
