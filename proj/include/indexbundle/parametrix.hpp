#pragma once

#include <optional>
#include <string>

#include "indexbundle/index_bundle.hpp"

namespace indexbundle {

enum class ParametrixStatus { built, obstructed };

template <class Scalar>
struct ParametrixResult {
  ParametrixStatus status = ParametrixStatus::obstructed;
  std::optional<MorphismField<Scalar>> compact_part;  // K with L + K invertible
  double min_sv = 0.0;   // worst restricted singular value of L + K
  int dim_v = 0;         // dimension of the transversal used by the build
  std::optional<InvariantRecord> obstruction;  // certificate when obstructed
  std::string certificate;
};

struct InvertibilityReport {
  bool pass = false;
  double min_sv = 0.0;
  int worst_vertex = -1;
};

/// Per-vertex restricted smallest singular value of a morphism between
/// equal-rank bundles; pass iff it clears sigma_floor everywhere.
template <class Scalar>
inline InvertibilityReport verify_invertible(const MorphismField<Scalar>& morphism,
                                             double sigma_floor,
                                             const ToleranceConfig& cfg) {
  InvertibilityReport report;
  report.min_sv = 1.0 / 0.0;
  const int vertices = morphism.domain.base->num_vertices;
  std::vector<double> svs(vertices, 0.0);
  parallel_for(vertices, cfg.threads, [&](int v) {
    const Mat<Scalar> p_basis = fibre_basis(morphism.domain.proj[v]);
    const Mat<Scalar> q_basis = fibre_basis(morphism.target.proj[v]);
    if (p_basis.cols() != q_basis.cols()) {
      throw Error(ErrorCode::invalid_morphism,
                  "invertibility needs index 0 at vertex " + std::to_string(v));
    }
    if (p_basis.cols() == 0) {
      svs[v] = 1.0;  // empty map is vacuously invertible
      return;
    }
    const Mat<Scalar> restricted = q_basis.adjoint() * morphism.mats[v] * p_basis;
    svs[v] = smallest_singular_value(restricted);
  });
  for (int v = 0; v < vertices; ++v) {
    if (svs[v] < report.min_sv) {
      report.min_sv = svs[v];
      report.worst_vertex = v;
    }
  }
  report.pass = report.min_sv >= sigma_floor;
  return report;
}

/// Decides ind(L) = 0 constructively. When the index class is stably trivial,
/// builds the finite-rank field K_x = a_x P_x - Q_x L_x from global frames of
/// E(L,V) and V (a maps the i-th frame section to the i-th frame section) and
/// verifies that L + K is fibrewise invertible. Otherwise reports the
/// obstructing invariant.
///
/// When the first kernel bundle refuses a global frame the transversal is
/// enlarged one global direction at a time, mirroring the proof's V + V'
/// step; running out of retries is reported as a failure, not an obstruction.
template <class Scalar>
inline ParametrixResult<Scalar> build_parametrix(const MorphismField<Scalar>& morphism,
                                                 const ToleranceConfig& cfg) {
  require_decidable_base(*morphism.domain.base, ProjectionField<Scalar>::scalar);
  const auto initial_class = index_class(morphism, cfg);
  const auto decision = decide_stably_trivial(initial_class.reduced);
  if (!decision.stably_trivial) {
    ParametrixResult<Scalar> result;
    result.status = ParametrixStatus::obstructed;
    result.obstruction = initial_class.reduced;
    result.certificate = decision.certificate;
    return result;
  }

  const int vertices = morphism.domain.base->num_vertices;
  const int n = morphism.target.ambient_dim;
  auto transversal = transversal_subbundle(morphism, cfg);
  Rng rng(cfg.seed ^ 0x70617261ull);
  std::optional<FrameSet<Scalar>> kernel_frame;
  ProjectionField<Scalar> kernel;
  for (int attempt = 0; attempt <= cfg.parametrix_retries; ++attempt) {
    kernel = kernel_bundle(morphism, transversal.field, cfg);
    kernel_frame = extract_global_frame(kernel, cfg);
    if (kernel_frame) break;
    if (attempt == cfg.parametrix_retries) {
      throw Error(ErrorCode::extension_failure,
                  "global kernel frame not found after " +
                      std::to_string(cfg.parametrix_retries) +
                      " transversal enlargements");
    }
    // enlarge V by one fresh global direction (the V + V' step)
    Vec<Scalar> extra = random_gaussian_matrix<Scalar>(n, 1, rng);
    extra -= transversal.frame * (transversal.frame.adjoint() * extra).eval();
    const double norm = extra.norm();
    if (norm < 1e-12 || transversal.frame.cols() >= n) {
      throw Error(ErrorCode::ambient_exhausted,
                  "cannot enlarge the transversal inside this ambient");
    }
    extra /= norm;
    transversal.frame.conservativeResize(Eigen::NoChange,
                                         transversal.frame.cols() + 1);
    transversal.frame.col(transversal.frame.cols() - 1) = extra;
    std::vector<Mat<Scalar>> generators(vertices);
    for (int v = 0; v < vertices; ++v) {
      generators[v] = morphism.target.proj[v] * transversal.frame;
    }
    transversal.field =
        subbundle_span(morphism.domain.base, n, generators, cfg);
  }

  // a maps the kernel frame to V's own frame (projected global vectors,
  // orthonormalized per vertex by the polar factor); K = a P - Q L
  std::vector<Mat<Scalar>> k_mats(vertices);
  for (int v = 0; v < vertices; ++v) {
    const Mat<Scalar>& e_frame = kernel_frame->sections[v];
    const Mat<Scalar> v_frame =
        polar_factor<Scalar>(morphism.target.proj[v] * transversal.frame);
    const Mat<Scalar> iso = v_frame * e_frame.adjoint();  // a_x on im E(L,V)
    k_mats[v] = iso * kernel.proj[v] -
                transversal.field.proj[v] * morphism.mats[v];
  }
  auto compact = make_morphism(morphism.domain, morphism.target,
                               std::move(k_mats), cfg);
  const auto perturbed = add(morphism, compact, cfg);
  const auto report = verify_invertible(perturbed, cfg.sigma_floor, cfg);
  if (!report.pass) {
    throw Error(ErrorCode::internal_error,
                "built parametrix fails invertibility at vertex " +
                    std::to_string(report.worst_vertex) + " (sv " +
                    std::to_string(report.min_sv) +
                    "); raise sigma_floor tolerance or refine the mesh");
  }

  ParametrixResult<Scalar> result;
  result.status = ParametrixStatus::built;
  result.compact_part = std::move(compact);
  result.min_sv = report.min_sv;
  result.dim_v = transversal.dim();
  return result;
}

}  // namespace indexbundle
