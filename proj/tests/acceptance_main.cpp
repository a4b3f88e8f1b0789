// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria run at pinned tolerances with pinned runtime budgets.

#include <chrono>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indexbundle/indexbundle.hpp"

using namespace indexbundle;

namespace {

const ToleranceConfig kCfg;

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<std::optional<std::string>()> body;
};

// ---------------------------------------------------------------------------
// 1. dimension formula: rank E(L,V)_x = ind(L_x) + dim V, integer-exact,
//    100 randomized families over circle_mesh(64) with ambient dims <= 8
std::optional<std::string> criterion_dimension_formula() {
  const auto mesh = share(circle_mesh(64));
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    FamilyShape shape;
    shape.ambient_domain = rng.uniform_int(2, 8);
    shape.ambient_target = rng.uniform_int(2, 8);
    shape.rank_domain = rng.uniform_int(1, shape.ambient_domain - 1);
    shape.rank_target = rng.uniform_int(1, shape.ambient_target - 1);
    shape.dips = rng.uniform_int(0, 1);
    auto check = [&](const auto& family) -> std::optional<std::string> {
      const auto data = transversal_subbundle(family, kCfg);
      const auto kernel = kernel_bundle(family, data.field, kCfg);
      for (int v = 0; v < mesh->num_vertices; ++v) {
        const int got = kernel.rank_at(v, kCfg);
        const int expected = family.index_at(v, kCfg) + data.dim();
        if (got != expected) {
          return "trial " + std::to_string(trial) + " vertex " +
                 std::to_string(v) + ": rank " + std::to_string(got) +
                 " != ind + dimV = " + std::to_string(expected);
        }
      }
      return std::nullopt;
    };
    const auto failure =
        (trial % 2 == 0)
            ? check(random_fredholm_family<double>(mesh, shape, rng, kCfg))
            : check(random_fredholm_family<cxd>(mesh, shape, rng, kCfg));
    if (failure) return failure;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 2. well-definedness: 50 randomized families, two transversal constructions
//    each, reduced invariants identical
std::optional<std::string> criterion_well_definedness() {
  const auto mesh = share(circle_mesh(64));
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    FamilyShape shape;
    shape.ambient_domain = shape.ambient_target = rng.uniform_int(3, 6);
    shape.rank_domain = shape.rank_target =
        rng.uniform_int(2, shape.ambient_domain - 1);
    shape.dips = rng.uniform_int(0, 1);
    const std::uint64_t seed_a = rng.bits();
    const std::uint64_t seed_b = rng.bits();
    try {
      if (trial % 2 == 0) {
        const auto family = random_fredholm_family<double>(mesh, shape, rng, kCfg);
        well_definedness_check(family, seed_a, seed_b, kCfg);
      } else {
        const auto family = random_fredholm_family<cxd>(mesh, shape, rng, kCfg);
        well_definedness_check(family, seed_a, seed_b, kCfg);
      }
    } catch (const Error& e) {
      return "trial " + std::to_string(trial) + ": " + e.what();
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 3. axiom suite: normalisation, compact perturbation (20), direct sum,
//    logarithmic (20), naturality with d in {0,1,2,3}, homotopy invariance
//    over product_with_interval(circle_mesh(32), 8)
std::optional<std::string> criterion_axiom_suite() {
  const auto report = run_axiom_suite(303, 20, kCfg, false, 32, 8);
  if (!report.pass()) {
    for (const auto& check : report.checks) {
      if (!check.pass()) return check.name + ": " + check.detail;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 4. classical vs general: 25 randomized families on trivial bundles
std::optional<std::string> criterion_classical_vs_general() {
  const auto mesh = share(circle_mesh(32));
  Rng rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const int ambient = rng.uniform_int(2, 5);
    const int dips = rng.uniform_int(0, 1);
    ToleranceConfig cfg_seeded = kCfg;
    cfg_seeded.seed = rng.bits();
    auto check = [&](const auto& family) -> std::optional<std::string> {
      const auto classical = classical_index_class(family, cfg_seeded).reduced;
      const auto general = index_class(family, kCfg).reduced;
      if (classical != general) {
        return "trial " + std::to_string(trial) + ": classical " +
               classical.to_string() + " != general " + general.to_string();
      }
      return std::nullopt;
    };
    const auto failure =
        (trial % 2 == 0)
            ? check(random_trivial_bundle_family<double>(mesh, ambient, dips, rng, kCfg))
            : check(random_trivial_bundle_family<cxd>(mesh, ambient, dips, rng, kCfg));
    if (failure) return failure;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 5. boundary value problems: trivial / Moebius / Bott boundary bundles with
//    grid-doubling invariance
std::optional<std::string> criterion_bvp() {
  // (a) trivial constant bundle over circle_mesh(64), s = 32
  {
    const auto mesh = share(circle_mesh(64));
    Eigen::Vector2d dir(1.0, 0.0);
    BvpSpec<double> spec;
    spec.boundary_bundle =
        constant_field<double>(mesh, Mat<double>(dir * dir.transpose()));
    spec.n = 1;
    spec.grid = 32;
    const auto report = bvp_check(spec, kCfg);
    if (!report.classes_equal || !report.computed.is_zero()) {
      return "trivial: class " + report.computed.to_string() + " != 0";
    }
    if (!report.stabilizable || report.min_sv < 1e-6) {
      return "trivial: parametrix not built with min_sv >= 1e-6 (min_sv " +
             std::to_string(report.min_sv) + ")";
    }
    auto doubled = spec;
    doubled.grid = 64;
    if (index_class(bvp_family(doubled, kCfg), kCfg).reduced != report.computed) {
      return "trivial: invariants changed under grid doubling";
    }
  }
  // (b) Moebius bundle: rank 0, w1 = 1, obstructed
  {
    const auto mesh = share(circle_mesh(64));
    BvpSpec<double> spec;
    spec.boundary_bundle = moebius_bundle(mesh);
    spec.n = 1;
    spec.grid = 32;
    const auto report = bvp_check(spec, kCfg);
    const InvariantRecord expected{0, {1}, {}};
    if (!report.classes_equal || report.computed != expected) {
      return "moebius: class " + report.computed.to_string() + " != rank 0, w1 = 1";
    }
    if (report.stabilizable) return "moebius: builder failed to report obstruction";
    auto doubled = spec;
    doubled.grid = 64;
    if (index_class(bvp_family(doubled, kCfg), kCfg).reduced != report.computed) {
      return "moebius: invariants changed under grid doubling";
    }
  }
  // (c) Bott bundle over sphere_mesh(1), s = 16, complex scalars
  {
    const auto sphere = share(sphere_mesh(1));
    BvpSpec<cxd> spec;
    spec.boundary_bundle = bott_bundle(sphere);
    spec.n = 1;
    spec.grid = 16;
    const auto report = bvp_check(spec, kCfg);
    if (!report.classes_equal || report.computed.rank != 0 ||
        report.computed.c1.size() != 1 || std::abs(report.computed.c1[0]) != 1) {
      return "bott: class " + report.computed.to_string() + " != rank 0, |c1| = 1";
    }
    if (report.stabilizable) return "bott: builder failed to report obstruction";
    auto doubled = spec;
    doubled.grid = 32;
    if (index_class(bvp_family(doubled, kCfg), kCfg).reduced != report.computed) {
      return "bott: invariants changed under grid doubling";
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 6. parametrix soundness: 25 randomized stably-trivial families build, pass
//    fibrewise invertibility at sigma_floor, and stabilize to class 0
std::optional<std::string> criterion_parametrix_soundness() {
  const auto mesh = share(circle_mesh(32));
  Rng rng(606);
  for (int trial = 0; trial < 25; ++trial) {
    const int ambient = rng.uniform_int(3, 6);
    const int rank = rng.uniform_int(2, ambient - 1);
    auto check = [&](const auto& family) -> std::optional<std::string> {
      const auto result = build_parametrix(family, kCfg);
      if (result.status != ParametrixStatus::built) {
        return "trial " + std::to_string(trial) + ": obstructed (" +
               result.certificate + ") on a stably trivial family";
      }
      const auto perturbed = add(family, *result.compact_part, kCfg);
      const auto report = verify_invertible(perturbed, 1e-6, kCfg);
      if (!report.pass) {
        return "trial " + std::to_string(trial) + ": min_sv " +
               std::to_string(report.min_sv) + " below 1e-6 at vertex " +
               std::to_string(report.worst_vertex);
      }
      if (!index_class(perturbed, kCfg).reduced.is_zero()) {
        return "trial " + std::to_string(trial) + ": L + K class is not 0";
      }
      return std::nullopt;
    };
    const auto failure =
        (trial % 2 == 0)
            ? check(random_stably_trivial_family<double>(mesh, ambient, rank, rng, kCfg))
            : check(random_stably_trivial_family<cxd>(mesh, ambient, rank, rng, kCfg));
    if (failure) return failure;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 7. invariant oracles: w1(Moebius) at mesh sizes 16/64/256, |c1(Bott)| at
//    subdivision levels 1 and 2, c1 additivity under direct sum
std::optional<std::string> criterion_invariant_oracles() {
  for (int m : {16, 64, 256}) {
    const auto mesh = share(circle_mesh(m));
    const int bit = w1_loop(moebius_bundle(mesh), mesh->loops[0], kCfg);
    if (bit != 1) {
      return "w1(moebius) = " + std::to_string(bit) + " at m = " + std::to_string(m);
    }
  }
  int c1_level1 = 0;
  for (int level : {1, 2}) {
    const auto sphere = share(sphere_mesh(level));
    const int c1 = c1_surface(bott_bundle(sphere), sphere->faces, kCfg);
    if (std::abs(c1) != 1) {
      return "|c1(bott)| = " + std::to_string(std::abs(c1)) + " at level " +
             std::to_string(level);
    }
    if (level == 1) {
      c1_level1 = c1;
    } else if (c1 != c1_level1) {
      return "c1(bott) differs across subdivision levels";
    }
  }
  const auto sphere = share(sphere_mesh(1));
  const auto bott = bott_bundle(sphere);
  const auto comp = complement<cxd>(bott, std::nullopt, kCfg);
  const int c_b = c1_surface(bott, sphere->faces, kCfg);
  const int c_c = c1_surface(comp, sphere->faces, kCfg);
  const int c_bb = c1_surface(direct_sum(bott, bott), sphere->faces, kCfg);
  const int c_bc = c1_surface(direct_sum(bott, comp), sphere->faces, kCfg);
  if (c_bb != 2 * c_b || c_bc != c_b + c_c || c_bc != 0) {
    return "c1 additivity violated: c1(B+B) = " + std::to_string(c_bb) +
           ", c1(B+B') = " + std::to_string(c_bc);
  }
  return std::nullopt;
}

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {"criterion 1: dimension formula, 100 random families, integer-exact", 10.0,
       criterion_dimension_formula},
      {"criterion 2: well-definedness across transversal choices, 50 families", 30.0,
       criterion_well_definedness},
      {"criterion 3: axiom suite (normalisation, compact, sum, log, naturality, homotopy)",
       30.0, criterion_axiom_suite},
      {"criterion 4: classical and general constructions coincide, 25 families", 30.0,
       criterion_classical_vs_general},
      {"criterion 5: boundary value problems (trivial, moebius, bott) with grid doubling",
       20.0, criterion_bvp},
      {"criterion 6: parametrix soundness on 25 stably trivial families", 60.0,
       criterion_parametrix_soundness},
      {"criterion 7: invariant oracles (w1 refinement-stable, c1 level-stable, additive)",
       30.0, criterion_invariant_oracles},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<std::string> failure;
    try {
      failure = criterion.body();
    } catch (const Error& e) {
      failure = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!failure && seconds > criterion.budget_seconds) {
      failure = "runtime " + std::to_string(seconds) + " s exceeds budget of " +
                std::to_string(criterion.budget_seconds) + " s";
    }
    if (failure) {
      ++failures;
      std::printf("FAIL  %s  [%.2fs]\n      %s\n", criterion.name.c_str(), seconds,
                  failure->c_str());
    } else {
      std::printf("PASS  %s  [%.2fs]\n", criterion.name.c_str(), seconds);
    }
  }
  if (failures > 0) {
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
