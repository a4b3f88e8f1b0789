#pragma once

#include <cstdint>
#include <limits>

#include "indexbundle/errors.hpp"

namespace indexbundle {

/// Numerical contracts shared by all modules: the rank rule, the idempotency
/// tolerance, the edge-continuity threshold and the RNG seed.
///
/// Rank rule: a singular value counts as zero when it falls below
///   rank_scale * max_dim * machine_eps * sigma_max.
struct ToleranceConfig {
  double rank_scale = 32.0;
  double tau_idem = 1e-8;
  double delta_edge = 0.5;
  std::uint64_t seed = 42;

  // secondary knobs
  double tau_trans_scale = 1e-6;  // transversality margin, relative to ||L||
  double tau_nest = 1e-6;        // subbundle nesting check
  double tau_restrict = 1e-6;    // image containment for restriction
  double sigma_floor = 1e-6;     // "invertible" decision for parametrices
  int frame_slack = 1;           // rank slack required by extend_frame
  int extension_retries = 16;
  int e1_search_budget = 64;
  int parametrix_retries = 8;
  int transversal_retries = 8;  // re-sweeps with rotated vertex order
  bool morphism_edge_check = false;  // optional Lipschitz check on morphisms
  int threads = 1;

  double rank_tolerance(double sigma_max, int max_dim) const {
    return rank_scale * static_cast<double>(max_dim) *
           std::numeric_limits<double>::epsilon() * sigma_max;
  }

  void validate() const {
    if (!(rank_scale > 0.0) || !(tau_idem > 0.0) || !(tau_trans_scale > 0.0) ||
        !(tau_nest > 0.0) || !(tau_restrict > 0.0) || !(sigma_floor > 0.0)) {
      throw Error(ErrorCode::invalid_config, "all tolerances must be positive");
    }
    if (!(delta_edge > 0.0 && delta_edge < 1.0)) {
      throw Error(ErrorCode::invalid_config, "delta_edge must lie in (0,1)");
    }
    if (frame_slack < 0 || extension_retries < 1 || e1_search_budget < 1 ||
        parametrix_retries < 1 || transversal_retries < 1 || threads < 1) {
      throw Error(ErrorCode::invalid_config, "budgets must be positive");
    }
  }
};

}  // namespace indexbundle
