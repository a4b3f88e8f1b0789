#include <doctest.h>

#include "indexbundle/bvp.hpp"

using namespace indexbundle;

namespace {

const ToleranceConfig kCfg;

BvpSpec<double> constant_spec(const MeshPtr& mesh, double a, double b, int grid) {
  // boundary condition (u(0), u(1)) in span{(a,b)}
  Eigen::Vector2d dir(a, b);
  dir.normalize();
  BvpSpec<double> spec;
  spec.boundary_bundle = constant_field<double>(mesh, Mat<double>(dir * dir.transpose()));
  spec.n = 1;
  spec.grid = grid;
  return spec;
}

}  // namespace

TEST_CASE("right endpoint condition gives an invertible family") {
  const auto mesh = share(circle_mesh(8));
  const auto spec = constant_spec(mesh, 1.0, 0.0, 12);  // u(1) = 0
  const auto family = bvp_family(spec, kCfg);
  CHECK(family.index_at(0, kCfg) == 0);
  CHECK(family.domain.rank_at(0, kCfg) == 12 - 1);

  // direct solve oracle: for random right-hand sides the discrete system
  // u_{j+1} = u_j + f_j / s with u_{s-1} = 0 has exactly one solution, and it
  // satisfies the boundary condition, so the family must be invertible
  const auto report = verify_invertible(family, kCfg.sigma_floor, kCfg);
  CHECK(report.pass);
  Rng rng(4);
  const int s = spec.grid;
  Vec<double> rhs = random_gaussian_matrix<double>(s - 1, 1, rng);
  Vec<double> u = Vec<double>::Zero(s);
  for (int j = s - 2; j >= 0; --j) u(j) = u(j + 1) - rhs(j) / s;
  // u solves L u = rhs and lies in the domain bundle
  const Vec<double> image = family.mats[0] * u;
  CHECK((image - rhs).norm() <= 1e-10);
  CHECK(std::abs(u(s - 1)) <= 1e-12);
}

TEST_CASE("periodic condition reproduces the constants/mean-zero splitting") {
  const auto mesh = share(circle_mesh(8));
  const auto spec = constant_spec(mesh, 1.0, 1.0, 12);  // u(0) = u(1)
  const auto family = bvp_family(spec, kCfg);
  const int s = spec.grid;

  // kernel = constants
  Vec<double> constants = Vec<double>::Ones(s) / std::sqrt(static_cast<double>(s));
  CHECK((family.mats[0] * constants).norm() <= 1e-12);
  CHECK((family.domain.proj[0] * constants - constants).norm() <= 1e-12);

  // cokernel = multiples of the all-ones functional (discrete mean-zero image)
  const auto p_basis = fibre_basis(family.domain.proj[0]);
  const Mat<double> restricted = family.mats[0] * p_basis;
  CHECK(numerical_rank_scaled(restricted, kCfg, family.max_norm()) == s - 2);
  Vec<double> ones = Vec<double>::Ones(s - 1);
  CHECK((restricted.adjoint() * ones).norm() <= 1e-9 * family.max_norm());
}

TEST_CASE("Moebius boundary bundle: class, grid independence, obstruction") {
  const auto mesh = share(circle_mesh(64));
  BvpSpec<double> spec;
  spec.boundary_bundle = moebius_bundle(mesh);
  spec.n = 1;
  spec.grid = 16;

  const auto family = bvp_family(spec, kCfg);
  for (int v = 0; v < 64; ++v) CHECK(family.index_at(v, kCfg) == 0);

  const auto expected = bvp_expected_class(spec, kCfg);
  CHECK(expected.reduced.rank == 0);
  CHECK(expected.reduced.w1 == std::vector<int>{1});

  const auto computed = index_class(family, kCfg);
  CHECK(computed.reduced == expected.reduced);

  // grid doubling leaves the invariants unchanged
  auto doubled = spec;
  doubled.grid = 32;
  const auto computed2 = index_class(bvp_family(doubled, kCfg), kCfg);
  CHECK(computed2.reduced == computed.reduced);

  const auto report = bvp_check(spec, kCfg);
  CHECK(report.classes_equal);
  CHECK_FALSE(report.stabilizable);
  CHECK(report.certificate == "w1[0] = 1");
}

TEST_CASE("trivial boundary bundle: class zero and parametrix built") {
  const auto mesh = share(circle_mesh(32));
  const auto spec = constant_spec(mesh, 1.0, 0.0, 12);
  const auto report = bvp_check(spec, kCfg);
  CHECK(report.classes_equal);
  CHECK(report.computed.is_zero());
  CHECK(report.stabilizable);
  CHECK(report.min_sv >= kCfg.sigma_floor);
}

TEST_CASE("the constants subspace is the paper's transversal witness") {
  const auto mesh = share(circle_mesh(16));
  BvpSpec<double> spec;
  spec.boundary_bundle = moebius_bundle(mesh);
  spec.n = 1;
  spec.grid = 12;
  const auto family = bvp_family(spec, kCfg);
  const int s = spec.grid;

  // Y1 = constant functions in the target K^{s-1}
  Vec<double> ones = Vec<double>::Ones(s - 1);
  ones.normalize();
  const auto witness =
      constant_field<double>(mesh, Mat<double>(ones * ones.transpose()));
  const auto kernel = kernel_bundle(family, witness, kCfg);

  for (int v = 0; v < 16; ++v) {
    // Eq-level dimension: ind + dim Y1 = 0 + 1
    CHECK(kernel.rank_at(v, kCfg) == 1);
    // fibres are the affine interpolants w_j = (1 - t_j) a + t_j b with
    // (a, b) in the boundary fibre
    const auto boundary_dir = fibre_basis(spec.boundary_bundle.proj[v]);
    const double a = boundary_dir(0, 0);
    const double b = boundary_dir(1, 0);
    Vec<double> interpolant(s);
    for (int j = 0; j < s; ++j) {
      const double t = static_cast<double>(j) / (s - 1);
      interpolant(j) = (1.0 - t) * a + t * b;
    }
    interpolant.normalize();
    const Mat<double> expected = interpolant * interpolant.transpose();
    CHECK(spectral_norm<double>(kernel.proj[v] - expected) <= 1e-8);
  }
}

TEST_CASE("Bott boundary bundle over the sphere is obstructed through c1") {
  const auto sphere = share(sphere_mesh(1));
  BvpSpec<cxd> spec;
  spec.boundary_bundle = bott_bundle(sphere);
  spec.n = 1;
  spec.grid = 8;

  const auto expected = bvp_expected_class(spec, kCfg);
  CHECK(expected.reduced.rank == 0);
  REQUIRE(expected.reduced.c1.size() == 1);
  CHECK(std::abs(expected.reduced.c1[0]) == 1);

  const auto report = bvp_check(spec, kCfg);
  CHECK(report.classes_equal);
  CHECK_FALSE(report.stabilizable);
  CHECK(report.certificate == "c1[0] = 1");
}

TEST_CASE("spec validation rejects malformed inputs") {
  const auto mesh = share(circle_mesh(8));
  BvpSpec<double> bad;
  bad.boundary_bundle = trivial_field<double>(mesh, 3, 1);  // ambient != 2n
  bad.n = 1;
  bad.grid = 8;
  CHECK_THROWS_AS(bvp_family(bad, kCfg), Error);

  auto coarse = constant_spec(mesh, 1.0, 0.0, 3);  // grid < 4
  CHECK_THROWS_AS(bvp_family(coarse, kCfg), Error);

  BvpSpec<double> wrong_rank;
  wrong_rank.boundary_bundle = trivial_field<double>(mesh, 2, 2);  // rank 2 != n
  wrong_rank.n = 1;
  wrong_rank.grid = 8;
  CHECK_THROWS_AS(bvp_family(wrong_rank, kCfg), Error);
}
