#include <doctest.h>

#include "indexbundle/bvp.hpp"
#include "indexbundle/morphism.hpp"
#include "indexbundle/random_families.hpp"

using namespace indexbundle;

namespace {
const ToleranceConfig kCfg;
}

TEST_CASE("make_morphism validates shapes, enforces intertwining") {
  const auto mesh = share(circle_mesh(8));
  const auto full2 = trivial_field<double>(mesh, 2, 2);

  SUBCASE("identity on the full bundle has index 0") {
    const auto id = identity_morphism(full2, kCfg);
    CHECK(id.index_at(0, kCfg) == 0);
  }

  SUBCASE("covector family from the Moebius bundle has index 0") {
    const auto moebius = moebius_bundle(mesh);
    const auto line = trivial_field<double>(mesh, 1, 1);
    std::vector<Mat<double>> mats(8, (Mat<double>(1, 2) << 1.0, 0.0).finished());
    const auto family = make_morphism(moebius, line, mats, kCfg);
    CHECK(family.index_at(0, kCfg) == 0);
    // intertwining holds exactly after enforcement
    for (int v = 0; v < 8; ++v) {
      const Mat<double> residual = line.proj[v] * family.mats[v] * moebius.proj[v] -
                                   family.mats[v];
      CHECK(spectral_norm(residual) <= 1e-14);
    }
  }

  SUBCASE("rank 2 to rank 1 gives index +1") {
    const auto rank1 = trivial_field<double>(mesh, 2, 1);
    std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
    const auto family = make_morphism(full2, rank1, mats, kCfg);
    CHECK(family.index_at(0, kCfg) == 1);
  }

  SUBCASE("base mismatch is rejected") {
    const auto other_mesh = share(circle_mesh(6));
    const auto other = trivial_field<double>(other_mesh, 2, 2);
    std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
    CHECK_THROWS_AS(make_morphism(full2, other, mats, kCfg), Error);
  }
}

TEST_CASE("composition is unital and adds indices") {
  const auto mesh = share(circle_mesh(8));
  const auto full2 = trivial_field<double>(mesh, 2, 2);
  const auto rank1 = trivial_field<double>(mesh, 2, 1);
  const auto id = identity_morphism(full2, kCfg);

  SUBCASE("identity is a unit") {
    Rng rng(5);
    const auto family = random_isomorphism_family<double>(mesh, 2, 2, rng, kCfg);
    const auto composed = compose(id, family, kCfg);
    for (int v = 0; v < 8; ++v) {
      CHECK(spectral_norm<double>(composed.mats[v] - family.mats[v]) <= 1e-14);
    }
  }

  SUBCASE("inclusion then projection has index 0") {
    std::vector<Mat<double>> incl(8, Mat<double>::Identity(2, 2));
    std::vector<Mat<double>> proj(8, Mat<double>::Identity(2, 2));
    const auto inclusion = make_morphism(rank1, full2, incl, kCfg);   // index -1
    const auto projection = make_morphism(full2, rank1, proj, kCfg);  // index +1
    CHECK(inclusion.index_at(0, kCfg) == -1);
    CHECK(projection.index_at(0, kCfg) == 1);
    const auto round = compose(projection, inclusion, kCfg);
    CHECK(round.index_at(0, kCfg) == 0);
  }

  SUBCASE("middle bundle mismatch is rejected") {
    std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
    const auto to_rank1 = make_morphism(full2, rank1, mats, kCfg);
    CHECK_THROWS_AS(compose(to_rank1, to_rank1, kCfg), Error);
  }
}

TEST_CASE("direct sums of morphisms are blockwise and index-additive") {
  const auto mesh = share(circle_mesh(8));
  const auto full2 = trivial_field<double>(mesh, 2, 2);
  const auto rank1 = trivial_field<double>(mesh, 2, 1);
  std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
  const auto plus_one = make_morphism(full2, rank1, mats, kCfg);
  const auto minus_one = make_morphism(rank1, full2, mats, kCfg);
  const auto sum = direct_sum_morphism(plus_one, minus_one, kCfg);
  CHECK(sum.index_at(0, kCfg) == 0);
  CHECK(sum.domain.ambient_dim == 4);

  const auto id = identity_morphism(full2, kCfg);
  const auto id_sum = direct_sum_morphism(id, id, kCfg);
  for (int v = 0; v < 8; ++v) {
    CHECK(spectral_norm<double>(id_sum.mats[v] -
                                Mat<double>::Identity(4, 4)) <= 1e-14);
  }
}

TEST_CASE("pullbacks copy fibre matrices exactly") {
  const int m = 8;
  const auto mesh = share(circle_mesh(m));
  Rng rng(9);
  const auto family = random_isomorphism_family<double>(mesh, 3, 2, rng, kCfg);

  SUBCASE("identity map") {
    MeshMap identity{mesh, mesh, std::vector<int>(m)};
    for (int j = 0; j < m; ++j) identity.vertex_assignment[j] = j;
    const auto pulled = pullback_morphism(identity, family, kCfg);
    for (int j = 0; j < m; ++j) {
      CHECK(spectral_norm<double>(pulled.mats[j] - family.mats[j]) <= 1e-14);
    }
  }
  SUBCASE("constant map yields a constant family") {
    const auto map = circle_power_map(m, 0);
    const auto pulled = pullback_morphism(map, family, kCfg);
    for (int j = 0; j < m; ++j) {
      CHECK(spectral_norm<double>(pulled.mats[j] - family.mats[0]) <= 1e-14);
    }
  }
  SUBCASE("degree-2 pullback matches the vertex assignment") {
    const auto map = circle_power_map(m, 2);
    const auto pulled = pullback_morphism(map, family, kCfg);
    for (int j = 0; j < 2 * m; ++j) {
      CHECK(spectral_norm<double>(pulled.mats[j] - family.mats[map(j)]) <= 1e-14);
    }
  }
}

TEST_CASE("random compact perturbations are bounded, finite rank, reproducible") {
  const auto mesh = share(circle_mesh(8));
  Rng rng(13);
  const auto family = random_isomorphism_family<double>(mesh, 4, 3, rng, kCfg);

  SUBCASE("magnitude zero is the zero field") {
    const auto zero = random_compact_perturbation(family, 2, 0.0, 7, kCfg);
    for (const auto& k : zero.mats) CHECK(spectral_norm(k) == 0.0);
  }
  SUBCASE("same seed reproduces the field bit for bit") {
    const auto a = random_compact_perturbation(family, 1, 0.5, 7, kCfg);
    const auto b = random_compact_perturbation(family, 1, 0.5, 7, kCfg);
    for (int v = 0; v < 8; ++v) {
      CHECK((a.mats[v] - b.mats[v]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("rank bound and norm bound hold vertexwise") {
    const auto k = random_compact_perturbation(family, 2, 0.5, 11, kCfg);
    for (int v = 0; v < 8; ++v) {
      CHECK(numerical_rank(k.mats[v], kCfg) <= 2);
      CHECK(spectral_norm(k.mats[v]) <= 0.5 + 1e-12);
    }
  }
}

TEST_CASE("restriction demands image containment") {
  const auto mesh = share(circle_mesh(8));
  const auto full3 = trivial_field<double>(mesh, 3, 3);
  const auto id = identity_morphism(full3, kCfg);
  const auto sub = trivial_field<double>(mesh, 3, 2);

  SUBCASE("identity restricted to a subbundle on both sides") {
    const auto restricted = restrict_morphism(id, sub, sub, kCfg);
    CHECK(restricted.index_at(0, kCfg) == 0);
    for (int v = 0; v < 8; ++v) {
      CHECK(spectral_norm<double>(restricted.mats[v] - sub.proj[v]) <= 1e-14);
    }
  }
  SUBCASE("a generic map escapes a random subbundle") {
    Rng rng(17);
    const auto family = random_isomorphism_family<double>(mesh, 3, 3, rng, kCfg);
    const auto random_sub = random_projection_field<double>(mesh, 3, 2, 0.2, rng);
    CHECK_THROWS_AS(restrict_morphism(family, random_sub, random_sub, kCfg), Error);
  }
}

TEST_CASE("image bundles exist exactly when the rank is constant") {
  const auto mesh = share(circle_mesh(8));
  const auto full2 = trivial_field<double>(mesh, 2, 2);

  SUBCASE("identity image is the full target") {
    const auto image = image_bundle(identity_morphism(full2, kCfg), kCfg);
    CHECK(image.rank_at(0, kCfg) == 2);
  }
  SUBCASE("constant projection has a constant image") {
    std::vector<Mat<double>> mats(8, (Mat<double>(2, 2) << 1, 0, 0, 0).finished());
    const auto family = make_morphism(full2, full2, mats, kCfg);
    const auto image = image_bundle(family, kCfg);
    for (int v = 0; v < 8; ++v) {
      CHECK(spectral_norm<double>(image.proj[v] - mats[0]) <= 1e-12);
    }
  }
  SUBCASE("rank jumps are rejected with the offending vertices") {
    std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
    mats[3] = (Mat<double>(2, 2) << 1, 0, 0, 0).finished();
    const auto family = make_morphism(full2, full2, mats, kCfg);
    CHECK_THROWS_WITH_AS(image_bundle(family, kCfg),
                         doctest::Contains("vertices: 3"), Error);
  }
}

TEST_CASE("optional Lipschitz check on morphisms can be switched on") {
  const auto mesh = share(circle_mesh(8));
  const auto full2 = trivial_field<double>(mesh, 2, 2);
  std::vector<Mat<double>> mats(8, Mat<double>::Identity(2, 2));
  mats[4] = -Mat<double>::Identity(2, 2);  // violent jump
  ToleranceConfig strict = kCfg;
  strict.morphism_edge_check = true;
  CHECK_THROWS_AS(make_morphism(full2, full2, mats, strict), Error);
  CHECK_NOTHROW(make_morphism(full2, full2, mats, kCfg));  // default off
}
