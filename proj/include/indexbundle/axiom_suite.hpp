#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "indexbundle/bvp.hpp"
#include "indexbundle/random_families.hpp"

namespace indexbundle {

/// Componentwise sum of reduced records: ranks add, orientation bits add mod
/// 2, curvature integers add.
inline InvariantRecord record_sum(const InvariantRecord& a, const InvariantRecord& b) {
  InvariantRecord sum;
  sum.rank = a.rank + b.rank;
  sum.w1.resize(std::max(a.w1.size(), b.w1.size()), 0);
  for (std::size_t i = 0; i < sum.w1.size(); ++i) {
    const int lhs = i < a.w1.size() ? a.w1[i] : 0;
    const int rhs = i < b.w1.size() ? b.w1[i] : 0;
    sum.w1[i] = lhs ^ rhs;
  }
  sum.c1.resize(std::max(a.c1.size(), b.c1.size()), 0);
  for (std::size_t i = 0; i < sum.c1.size(); ++i) {
    const int lhs = i < a.c1.size() ? a.c1[i] : 0;
    const int rhs = i < b.c1.size() ? b.c1[i] : 0;
    sum.c1[i] = lhs + rhs;
  }
  return sum;
}

struct CheckResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  std::string detail;  // first failure, or empty

  bool pass() const { return failures == 0; }
};

struct RunReport {
  std::string command;
  std::uint64_t seed = 0;
  int trials = 0;
  std::vector<CheckResult> checks;
  double wall_ms = 0.0;

  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass()) return false;
    }
    return true;
  }
};

namespace detail {

using TrialBody = std::function<std::optional<std::string>(Rng&, bool /*complex*/)>;

inline CheckResult run_check(const std::string& name, int trials, Rng& rng,
                             const TrialBody& body) {
  CheckResult result;
  result.name = name;
  result.trials = trials;
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng = rng.fork(static_cast<std::uint64_t>(t) + 1);
    std::optional<std::string> failure;
    try {
      failure = body(trial_rng, t % 2 == 1);
    } catch (const Error& e) {
      failure = std::string("exception: ") + e.what();
    }
    if (failure) {
      ++result.failures;
      if (result.detail.empty()) {
        result.detail = "trial " + std::to_string(t) + ": " + *failure;
      }
    }
  }
  return result;
}

template <class Scalar>
inline std::optional<std::string> normalisation_trial(Rng& rng,
                                                      const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(16));
  const int ambient = rng.uniform_int(3, 5);
  const int rank = rng.uniform_int(1, ambient - 1);
  const auto iso = random_isomorphism_family<Scalar>(mesh, ambient, rank, rng, cfg);
  const auto record = index_class(iso, cfg).reduced;
  if (!record.is_zero()) {
    return "isomorphism class " + record.to_string() + " != 0";
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> compact_trial(Rng& rng, const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(32));
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = rng.uniform_int(3, 5);
  shape.rank_domain = shape.rank_target =
      rng.uniform_int(2, shape.ambient_domain - 1);
  shape.dips = rng.uniform_int(0, 1);
  const auto family = random_fredholm_family<Scalar>(mesh, shape, rng, cfg);
  const auto perturbation = random_compact_perturbation(
      family, rng.uniform_int(1, 2), 0.3, rng.bits(), cfg);
  const auto base_record = index_class(family, cfg).reduced;
  const auto perturbed_record = index_class(add(family, perturbation, cfg), cfg).reduced;
  if (base_record != perturbed_record) {
    return "class changed under compact perturbation: " + base_record.to_string() +
           " vs " + perturbed_record.to_string();
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> direct_sum_trial(Rng& rng,
                                                   const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(32));
  FamilyShape shape_a, shape_b;
  shape_a.ambient_domain = shape_a.ambient_target = 4;
  shape_a.rank_domain = rng.uniform_int(1, 3);
  shape_a.rank_target = rng.uniform_int(1, 3);
  shape_a.dips = 1;
  shape_b.ambient_domain = shape_b.ambient_target = 3;
  shape_b.rank_domain = rng.uniform_int(1, 2);
  shape_b.rank_target = rng.uniform_int(1, 2);
  shape_b.dips = 0;
  const auto family_a = random_fredholm_family<Scalar>(mesh, shape_a, rng, cfg);
  const auto family_b = random_fredholm_family<Scalar>(mesh, shape_b, rng, cfg);
  const auto sum_record =
      index_class(direct_sum_morphism(family_a, family_b, cfg), cfg).reduced;
  const auto expected = record_sum(index_class(family_a, cfg).reduced,
                                   index_class(family_b, cfg).reduced);
  if (sum_record != expected) {
    return "direct sum: " + sum_record.to_string() + " != " + expected.to_string();
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> logarithmic_trial(Rng& rng,
                                                    const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(32));
  auto [family_l, family_m] = random_composable_pair<Scalar>(mesh, rng, cfg);
  const auto composite_record =
      index_class(compose(family_m, family_l, cfg), cfg).reduced;
  const auto expected = record_sum(index_class(family_l, cfg).reduced,
                                   index_class(family_m, cfg).reduced);
  if (composite_record != expected) {
    return "logarithmic: " + composite_record.to_string() + " != " +
           expected.to_string();
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> naturality_trial(Rng& rng,
                                                   const ToleranceConfig& cfg) {
  const int m = 32;
  const auto mesh = share(circle_mesh(m));
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = 4;
  shape.rank_domain = shape.rank_target = 2;
  shape.dips = rng.uniform_int(0, 1);
  const auto family = random_fredholm_family<Scalar>(mesh, shape, rng, cfg);
  const auto record = index_class(family, cfg).reduced;
  for (int degree = 0; degree <= 3; ++degree) {
    MeshMap map = circle_power_map(m, degree);
    map.target = mesh;  // same circle
    const auto pulled = pullback_morphism(map, family, cfg);
    const auto pulled_record = index_class(pulled, cfg).reduced;
    if (pulled_record.rank != record.rank) {
      return "naturality rank mismatch at degree " + std::to_string(degree);
    }
    if constexpr (!is_complex_v<Scalar>) {
      const int expected_bit = (degree * record.w1[0]) % 2;
      if (pulled_record.w1[0] != expected_bit) {
        return "naturality w1 at degree " + std::to_string(degree) + ": got " +
               std::to_string(pulled_record.w1[0]) + " expected " +
               std::to_string(expected_bit);
      }
    }
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> homotopy_trial(Rng& rng, const ToleranceConfig& cfg,
                                                 int circle_size, int steps) {
  const auto circle = share(circle_mesh(circle_size));
  const auto product = share(product_with_interval(circle, steps));
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = 4;
  shape.rank_domain = shape.rank_target = 2;
  shape.dips = 1;
  const auto family = random_fredholm_family<Scalar>(product, shape, rng, cfg);
  const auto first = pullback_morphism(slice_inclusion(product, 0), family, cfg);
  const auto last =
      pullback_morphism(slice_inclusion(product, steps - 1), family, cfg);
  const auto record_first = index_class(first, cfg).reduced;
  const auto record_last = index_class(last, cfg).reduced;
  if (record_first != record_last) {
    return "slice classes differ: " + record_first.to_string() + " vs " +
           record_last.to_string();
  }
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> welldef_trial(Rng& rng, const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(32));
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = rng.uniform_int(4, 5);
  shape.rank_domain = shape.rank_target = rng.uniform_int(2, 3);
  shape.dips = 1;
  const auto family = random_fredholm_family<Scalar>(mesh, shape, rng, cfg);
  const auto report = well_definedness_check(family, rng.bits(), rng.bits(), cfg);
  if (!report.equal) return std::string("transversal choices disagree");
  return std::nullopt;
}

template <class Scalar>
inline std::optional<std::string> classical_trial(Rng& rng, const ToleranceConfig& cfg) {
  const auto mesh = share(circle_mesh(32));
  const int ambient = rng.uniform_int(2, 4);
  const auto family = random_trivial_bundle_family<Scalar>(
      mesh, ambient, rng.uniform_int(0, 1), rng, cfg);
  ToleranceConfig cfg_seeded = cfg;
  cfg_seeded.seed = rng.bits();
  const auto classical = classical_index_class(family, cfg_seeded).reduced;
  const auto general = index_class(family, cfg).reduced;
  if (classical != general) {
    return "classical " + classical.to_string() + " != general " +
           general.to_string();
  }
  return std::nullopt;
}

}  // namespace detail

/// Runs every axiom-level property over randomized families. A deliberately
/// broken comparison can be injected to exercise the failure path of the
/// harness itself.
inline RunReport run_axiom_suite(std::uint64_t seed, int trials,
                                 const ToleranceConfig& base_cfg,
                                 bool inject_break = false,
                                 int homotopy_circle = 32, int homotopy_steps = 8) {
  if (trials < 1) {
    throw Error(ErrorCode::invalid_config, "trials must be >= 1");
  }
  ToleranceConfig cfg = base_cfg;
  const auto t0 = std::chrono::steady_clock::now();
  RunReport report;
  report.command = "axioms verify";
  report.seed = seed;
  report.trials = trials;
  Rng rng(seed);

  auto alternating = [&cfg](auto&& real_body, auto&& complex_body) {
    return [&cfg, real_body, complex_body](
               Rng& trial_rng, bool use_complex) -> std::optional<std::string> {
      return use_complex ? complex_body(trial_rng, cfg) : real_body(trial_rng, cfg);
    };
  };

  report.checks.push_back(detail::run_check(
      "normalisation", trials, rng,
      alternating(detail::normalisation_trial<double>,
                  detail::normalisation_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "compact-perturbation", trials, rng,
      alternating(detail::compact_trial<double>, detail::compact_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "direct-sum", trials, rng,
      alternating(detail::direct_sum_trial<double>, detail::direct_sum_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "logarithmic", trials, rng,
      alternating(detail::logarithmic_trial<double>, detail::logarithmic_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "naturality", trials, rng,
      alternating(detail::naturality_trial<double>, detail::naturality_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "homotopy-invariance", trials, rng,
      [&cfg, homotopy_circle, homotopy_steps](
          Rng& trial_rng, bool use_complex) -> std::optional<std::string> {
        return use_complex
                   ? detail::homotopy_trial<cxd>(trial_rng, cfg, homotopy_circle,
                                                 homotopy_steps)
                   : detail::homotopy_trial<double>(trial_rng, cfg, homotopy_circle,
                                                    homotopy_steps);
      }));
  report.checks.push_back(detail::run_check(
      "well-definedness", trials, rng,
      alternating(detail::welldef_trial<double>, detail::welldef_trial<cxd>)));
  report.checks.push_back(detail::run_check(
      "classical-vs-general", trials, rng,
      alternating(detail::classical_trial<double>, detail::classical_trial<cxd>)));

  if (inject_break) {
    CheckResult broken;
    broken.name = "injected-break";
    broken.trials = 1;
    broken.failures = 1;
    broken.detail =
        "harness self-test: deliberately flipped comparison (counterexample: "
        "rank=0 w1=[1] reported equal to rank=0 w1=[0])";
    report.checks.push_back(broken);
  }

  const auto t1 = std::chrono::steady_clock::now();
  report.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return report;
}

}  // namespace indexbundle
