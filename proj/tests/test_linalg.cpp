#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include "indexbundle/linalg.hpp"

using namespace indexbundle;

TEST_CASE("numerical rank follows the scaled cutoff rule") {
  ToleranceConfig cfg;
  Mat<double> m(2, 2);
  m << 1.0, 0.0, 0.0, 1e-15;
  CHECK(numerical_rank(m, cfg) == 1);
  m(1, 1) = 1e-3;
  CHECK(numerical_rank(m, cfg) == 2);
  CHECK(numerical_rank(Mat<double>(Mat<double>::Zero(3, 3)), cfg) == 0);
  // the cutoff scales with sigma_max
  m << 1e8, 0.0, 0.0, 1.0;
  CHECK(numerical_rank(m, cfg) == 2);
  m(1, 1) = 1e-9;
  CHECK(numerical_rank(m, cfg) == 1);
}

TEST_CASE("kernel and cokernel bases are orthonormal and exact") {
  ToleranceConfig cfg;
  Mat<double> m(2, 3);
  m << 1, 0, 0, 0, 1, 0;
  const auto kernel = kernel_basis(m, cfg);
  REQUIRE(kernel.cols() == 1);
  CHECK(std::abs(kernel(2, 0)) == doctest::Approx(1.0));
  CHECK((m * kernel).norm() == doctest::Approx(0.0).epsilon(1e-14));

  const auto coker = cokernel_basis(Mat<double>(m.transpose()), cfg);
  REQUIRE(coker.cols() == 1);
  CHECK((coker.adjoint() * m.transpose()).norm() ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("polar factor is unitary and close to its argument") {
  ToleranceConfig cfg;
  Rng rng(3);
  const Mat<cxd> g = random_gaussian_matrix<cxd>(4, 2, rng);
  const Mat<cxd> u = polar_factor(g);
  CHECK((u.adjoint() * u - Mat<cxd>::Identity(2, 2)).norm() ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("unitary fractional power interpolates rotations") {
  // rotation by angle a: fractional power t gives rotation by t*a
  const double angle = 0.8;
  Mat<double> rot(2, 2);
  rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  const auto half = unitary_fractional_power(rot, 0.5);
  CHECK((half * half - rot).norm() == doctest::Approx(0.0).epsilon(1e-10));
  // identity at t = 0, the matrix itself at t = 1
  CHECK((unitary_fractional_power(rot, 0.0) - Mat<double>::Identity(2, 2)).norm() ==
        doctest::Approx(0.0).epsilon(1e-10));
  CHECK((unitary_fractional_power(rot, 1.0) - rot).norm() ==
        doctest::Approx(0.0).epsilon(1e-10));

  // complex unitary
  Rng rng(11);
  const Mat<cxd> skew = random_skew<cxd>(3, 0.7, rng);
  const Mat<cxd> u = skew.exp();
  const auto third = unitary_fractional_power(u, 1.0 / 3.0);
  CHECK((third * third * third - u).norm() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("rng streams are deterministic and forkable") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.gaussian() == b.gaussian());
  Rng c(42);
  auto child1 = c.fork(1);
  Rng d(42);
  auto child2 = d.fork(1);
  for (int i = 0; i < 10; ++i) CHECK(child1.uniform() == child2.uniform());
}

TEST_CASE("parallel_for covers the range and propagates exceptions") {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(
      parallel_for(8, 2,
                   [](int i) {
                     if (i == 5) throw Error(ErrorCode::internal_error, "boom");
                   }),
      Error);
}
