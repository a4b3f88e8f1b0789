#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "indexbundle/invariants.hpp"
#include "indexbundle/morphism.hpp"

namespace indexbundle {

/// A finite-dimensional trivial subbundle of the target that is transversal to
/// im(L) at every vertex: V_x = span{Q_x v_j} for global ambient vectors v_j
/// (the columns of `frame`). The projected frame stays pointwise independent,
/// which is what makes V trivial with an explicit global frame.
template <class Scalar>
struct TransversalData {
  Mat<Scalar> frame;              // ambient x k global vectors
  ProjectionField<Scalar> field;  // projector onto span{Q_x v_j}
  double min_margin = 0.0;        // worst transversality margin over vertices

  int dim() const { return static_cast<int>(frame.cols()); }
};

/// Formal difference of two projection fields together with its reduced
/// invariants; the computable stand-in for an element of K(X) / KO(X).
template <class Scalar>
struct VirtualBundle {
  ProjectionField<Scalar> plus;
  ProjectionField<Scalar> minus;
  InvariantRecord reduced;

  InvariantRecord recompute_record(const ToleranceConfig& cfg) const {
    return reduce_virtual(plus, minus, cfg);
  }
};

namespace detail {

/// Transversality margin of the current projected frame at one vertex: the
/// rank(Q)-th singular value of [L_x B_P | basis(V_x)] expressed in an
/// orthonormal basis of im(Q_x).
template <class Scalar>
struct MarginData {
  double margin = 0.0;
  Mat<Scalar> q_basis;       // ambient x rank(Q)
  Mat<Scalar> assembled;     // rank(Q) x (rank(P) + dim V_x)
};

template <class Scalar>
inline MarginData<Scalar> transversality_margin(const MorphismField<Scalar>& morphism,
                                                const Mat<Scalar>& frame, int vertex,
                                                const ToleranceConfig& cfg) {
  MarginData<Scalar> data;
  const Mat<Scalar> p_basis = fibre_basis(morphism.domain.proj[vertex]);
  data.q_basis = fibre_basis(morphism.target.proj[vertex]);
  const int rank_q = static_cast<int>(data.q_basis.cols());
  Mat<Scalar> v_basis(morphism.target.ambient_dim, 0);
  if (frame.cols() > 0) {
    v_basis = image_basis<Scalar>(morphism.target.proj[vertex] * frame, cfg, 1.0);
  }
  Mat<Scalar> columns(morphism.target.ambient_dim,
                      p_basis.cols() + v_basis.cols());
  columns << morphism.mats[vertex] * p_basis, v_basis;
  data.assembled = data.q_basis.adjoint() * columns;
  data.margin = (rank_q == 0) ? 1.0 : kth_singular_value(data.assembled, rank_q);
  return data;
}

}  // namespace detail

/// Transversality threshold: tau_trans_scale relative to the family's largest
/// singular value, floored at tau_trans_scale itself so the zero morphism
/// still demands an honest transversal.
template <class Scalar>
inline double transversality_threshold(const MorphismField<Scalar>& morphism,
                                       const ToleranceConfig& cfg) {
  return cfg.tau_trans_scale * std::max(1.0, morphism.max_norm());
}

namespace detail {

/// One greedy sweep attempt: visit vertices in index order (rotated by
/// `start`), and wherever the margin falls short append the defect directions
/// (left singular vectors of the assembled matrix below the threshold, worst
/// first) to the global frame, re-project everywhere, repeat until every
/// vertex clears the margin.
///
/// The global frame is kept orthonormal; recombinations do not change any
/// V_x = span{Q_x v_j}. When the target fibres cannot carry a trivial bundle
/// of the required dimension the sweep runs out of directions and reports
/// that the ambient must be enlarged.
template <class Scalar>
inline TransversalData<Scalar> transversal_sweep(const MorphismField<Scalar>& morphism,
                                                 const ToleranceConfig& cfg, int start) {
  const int vertices = morphism.domain.base->num_vertices;
  const int ambient = morphism.target.ambient_dim;
  const double threshold = transversality_threshold(morphism, cfg);

  Mat<Scalar> frame(ambient, 0);
  const int max_sweeps = 4 * ambient + 16;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (int step = 0; step < vertices; ++step) {
      const int v = (start + step) % vertices;
      auto data = transversality_margin(morphism, frame, v, cfg);
      if (data.margin >= threshold) continue;
      converged = false;
      // defect directions at this vertex, in decreasing defect order
      const int rank_q = static_cast<int>(data.q_basis.cols());
      std::vector<Vec<Scalar>> defects;
      if (data.assembled.cols() == 0) {
        for (int i = 0; i < rank_q; ++i) defects.push_back(data.q_basis.col(i));
      } else {
        Eigen::JacobiSVD<Mat<Scalar>> svd(data.assembled, Eigen::ComputeFullU);
        for (int i = rank_q - 1; i >= 0; --i) {
          const double sigma =
              (i < svd.singularValues().size()) ? svd.singularValues()(i) : 0.0;
          if (sigma < threshold) {
            defects.push_back(data.q_basis * svd.matrixU().col(i));
          }
        }
      }
      for (const Vec<Scalar>& direction : defects) {
        // orthonormalize against the current frame; keep the frame unitary.
        // A residual that is mostly noise would seed an ill-conditioned
        // projected frame, so such adjoins abort the attempt instead.
        Vec<Scalar> residual =
            direction - frame * (frame.adjoint() * direction).eval();
        const double norm = residual.norm();
        if (norm <= 1e-10) {
          throw Error(ErrorCode::ambient_exhausted,
                      "no trivial transversal subbundle fits the target fibres "
                      "(vertex " + std::to_string(v) + "); enlarge the ambient");
        }
        if (norm < 0.05) {
          throw Error(ErrorCode::not_a_bundle,
                      "transversal augmentation became ill-conditioned at vertex " +
                          std::to_string(v));
        }
        if (frame.cols() >= ambient) {
          throw Error(ErrorCode::ambient_exhausted,
                      "transversal frame would exceed the ambient dimension " +
                          std::to_string(ambient));
        }
        frame.conservativeResize(Eigen::NoChange, frame.cols() + 1);
        frame.col(frame.cols() - 1) = residual / norm;
      }
    }
  }
  if (!converged) {
    throw Error(ErrorCode::ambient_exhausted,
                "transversal sweep failed to converge; enlarge the ambient");
  }

  TransversalData<Scalar> result;
  result.frame = frame;
  // project the frame into every fibre
  std::vector<Mat<Scalar>> generators(vertices);
  for (int v = 0; v < vertices; ++v) {
    generators[v] = morphism.target.proj[v] * frame;
  }
  if (frame.cols() > 0) {
    for (int v = 0; v < vertices; ++v) {
      const double smin = smallest_singular_value(generators[v]);
      if (smin < cfg.rank_tolerance(1.0, ambient) * 10.0 + 1e-12) {
        throw Error(ErrorCode::ambient_exhausted,
                    "projected transversal frame degenerates at vertex " +
                        std::to_string(v) + "; enlarge the ambient");
      }
    }
  }
  result.field = subbundle_span(morphism.domain.base, ambient, generators, cfg);
  const auto report = validate_bundle(result.field, cfg);
  if (!report.pass) {
    throw Error(ErrorCode::not_a_bundle,
                "transversal field is not edge-continuous: " + report.summary());
  }
  result.min_margin = 1.0 / 0.0;
  for (int v = 0; v < vertices; ++v) {
    result.min_margin =
        std::min(result.min_margin,
                 transversality_margin(morphism, frame, v, cfg).margin);
  }
  return result;
}

}  // namespace detail

/// Finds a trivial transversal subbundle of the target. Sweep attempts start
/// at seed-dependent vertices; an attempt whose projected frame turns out
/// ill-conditioned (the field would not validate as a bundle) is retried from
/// a rotated starting vertex.
template <class Scalar>
inline TransversalData<Scalar> transversal_subbundle(const MorphismField<Scalar>& morphism,
                                                     const ToleranceConfig& cfg) {
  const int vertices = morphism.domain.base->num_vertices;
  std::string last_failure;
  for (int attempt = 0; attempt < cfg.transversal_retries; ++attempt) {
    const int start =
        (vertices == 0)
            ? 0
            : static_cast<int>((cfg.seed + static_cast<std::uint64_t>(attempt) * 7919u) %
                               static_cast<std::uint64_t>(vertices));
    try {
      return detail::transversal_sweep(morphism, cfg, start);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::not_a_bundle) throw;
      last_failure = e.what();
    }
  }
  throw Error(ErrorCode::ambient_exhausted,
              "no well-conditioned trivial transversal found after " +
                  std::to_string(cfg.transversal_retries) + " sweeps; " +
                  last_failure);
}

/// E(L,V): the projector field onto {u in im P_x : L_x u in V_x}, i.e. the
/// kernel of (I - P_V) L restricted to the domain bundle. The fibre dimension
/// must equal ind(L_x) + dim V at every vertex.
template <class Scalar>
inline ProjectionField<Scalar> kernel_bundle(const MorphismField<Scalar>& morphism,
                                             const ProjectionField<Scalar>& transversal,
                                             const ToleranceConfig& cfg) {
  const int vertices = morphism.domain.base->num_vertices;
  const int n = morphism.target.ambient_dim;
  const double threshold = transversality_threshold(morphism, cfg);
  const double family_scale = std::max(morphism.max_norm(), 1.0);
  ProjectionField<Scalar> out;
  out.base = morphism.domain.base;
  out.ambient_dim = morphism.domain.ambient_dim;
  out.proj.resize(vertices);
  parallel_for(vertices, cfg.threads, [&](int v) {
    const Mat<Scalar> p_basis = fibre_basis(morphism.domain.proj[v]);
    const Mat<Scalar> v_basis = fibre_basis(transversal.proj[v]);
    const int dim_v = static_cast<int>(v_basis.cols());
    // margin check for Eq. (2.1)
    const Mat<Scalar> q_basis = fibre_basis(morphism.target.proj[v]);
    Mat<Scalar> columns(n, p_basis.cols() + dim_v);
    columns << morphism.mats[v] * p_basis, v_basis;
    const double margin =
        (q_basis.cols() == 0)
            ? 1.0
            : kth_singular_value<Scalar>(q_basis.adjoint() * columns,
                                         static_cast<int>(q_basis.cols()));
    if (margin < threshold) {
      throw Error(ErrorCode::transversality_degraded,
                  "supplied subbundle is not transversal at vertex " +
                      std::to_string(v) + " (margin " + std::to_string(margin) + ")");
    }
    const Mat<Scalar> complement_map =
        (Mat<Scalar>::Identity(n, n) - projector_onto(v_basis)) *
        morphism.mats[v] * p_basis;
    const Mat<Scalar> kernel = kernel_basis(complement_map, cfg, family_scale);
    const int expected = morphism.index_at(v, cfg) + dim_v;
    if (static_cast<int>(kernel.cols()) != expected) {
      throw Error(ErrorCode::transversality_degraded,
                  "kernel dimension " + std::to_string(kernel.cols()) +
                      " != ind + dim V = " + std::to_string(expected) +
                      " at vertex " + std::to_string(v));
    }
    out.proj[v] = projector_onto<Scalar>(p_basis * kernel);
  });
  const auto report = validate_bundle(out, cfg);
  if (!report.pass) {
    throw Error(ErrorCode::not_a_bundle,
                "kernel bundle E(L,V) varies faster than the mesh resolves (" +
                    report.summary() + "); refine the mesh");
  }
  return out;
}

/// The index bundle of L: [E(L,V)] - [V] for a constructed transversal V,
/// together with its reduced invariants.
template <class Scalar>
inline VirtualBundle<Scalar> index_class(const MorphismField<Scalar>& morphism,
                                         const ToleranceConfig& cfg) {
  const auto transversal = transversal_subbundle(morphism, cfg);
  VirtualBundle<Scalar> result;
  result.plus = kernel_bundle(morphism, transversal.field, cfg);
  result.minus = transversal.field;
  result.reduced = reduce_virtual(result.plus, result.minus, cfg);
  return result;
}

struct WellDefinednessReport {
  InvariantRecord first;
  InvariantRecord second;
  int dim_first = 0;
  int dim_second = 0;
  bool equal = false;
};

/// Thm level check: two transversal constructions from different seeds must
/// reduce to the same invariants. Inequality indicates a tolerance bug and is
/// reported as an error.
template <class Scalar>
inline WellDefinednessReport well_definedness_check(const MorphismField<Scalar>& morphism,
                                                    std::uint64_t seed_a,
                                                    std::uint64_t seed_b,
                                                    const ToleranceConfig& cfg) {
  ToleranceConfig cfg_a = cfg;
  cfg_a.seed = seed_a;
  ToleranceConfig cfg_b = cfg;
  cfg_b.seed = seed_b;
  const auto class_a = index_class(morphism, cfg_a);
  const auto class_b = index_class(morphism, cfg_b);
  WellDefinednessReport report;
  report.first = class_a.reduced;
  report.second = class_b.reduced;
  report.dim_first = rank_of(class_a.minus, cfg);
  report.dim_second = rank_of(class_b.minus, cfg);
  report.equal = (report.first == report.second);
  if (!report.equal) {
    throw Error(ErrorCode::well_definedness_violation,
                "transversal choices disagree: " + report.first.to_string() +
                    " vs " + report.second.to_string());
  }
  return report;
}

/// The classical construction over trivial bundles: find a subspace E1 of
/// maximal codimension c = max_x dim ker L_x meeting every kernel trivially
/// (randomized draws with a singular-value certificate), then return
/// [Theta(K^M / E1)] - [im(I - P)].
template <class Scalar>
inline VirtualBundle<Scalar> classical_index_class(const MorphismField<Scalar>& morphism,
                                                   const ToleranceConfig& cfg) {
  const int m = morphism.domain.ambient_dim;
  const int n = morphism.target.ambient_dim;
  const int vertices = morphism.domain.base->num_vertices;
  for (int v = 0; v < vertices; ++v) {
    if (spectral_norm<Scalar>(morphism.domain.proj[v] -
                              Mat<Scalar>::Identity(m, m)) > cfg.tau_nest ||
        spectral_norm<Scalar>(morphism.target.proj[v] -
                              Mat<Scalar>::Identity(n, n)) > cfg.tau_nest) {
      throw Error(ErrorCode::invalid_morphism,
                  "classical construction needs full trivial domain and target");
    }
  }
  const double family_scale = std::max(morphism.max_norm(), 1.0);
  int codim = 0;
  for (int v = 0; v < vertices; ++v) {
    codim = std::max(codim,
                     m - numerical_rank_scaled(morphism.mats[v], cfg, family_scale));
  }

  Rng rng(cfg.seed);
  VirtualBundle<Scalar> result;
  bool found = false;
  for (int attempt = 0; attempt < cfg.e1_search_budget && !found; ++attempt) {
    Mat<Scalar> candidate = random_gaussian_matrix<Scalar>(m, m - codim, rng);
    candidate = image_basis(candidate, cfg);
    if (candidate.cols() != m - codim) continue;
    // certificate: L_x stays injective on E1 at every vertex
    bool ok = true;
    for (int v = 0; v < vertices && ok; ++v) {
      const Mat<Scalar> restricted = morphism.mats[v] * candidate;
      if (kth_singular_value(restricted, m - codim) <= 1e-3 * family_scale) {
        ok = false;
      }
    }
    if (!ok) continue;
    // build im(I - P) for this draw; a draw too close to some kernel leaves
    // image planes the mesh cannot resolve, in which case the next draw runs
    ProjectionField<Scalar> minus;
    minus.base = morphism.domain.base;
    minus.ambient_dim = n;
    minus.proj.resize(vertices);
    for (int v = 0; v < vertices && ok; ++v) {
      const Mat<Scalar> image =
          image_basis<Scalar>(morphism.mats[v] * candidate, cfg, family_scale);
      if (static_cast<int>(image.cols()) != m - codim) {
        ok = false;
        break;
      }
      minus.proj[v] = Mat<Scalar>::Identity(n, n) - projector_onto(image);
    }
    if (!ok || !validate_bundle(minus, cfg).pass) continue;
    result.minus = std::move(minus);
    result.plus = constant_field<Scalar>(
        morphism.domain.base,
        Mat<Scalar>::Identity(m, m) - projector_onto(candidate));
    found = true;
  }
  if (!found) {
    throw Error(ErrorCode::e1_search_failure,
                "no complement to the kernels with a mesh-resolvable image "
                "bundle within " + std::to_string(cfg.e1_search_budget) +
                    " draws (seed " + std::to_string(cfg.seed) +
                    "); reseed or refine the mesh");
  }
  result.reduced = reduce_virtual(result.plus, result.minus, cfg);
  return result;
}

template <class Scalar>
struct ReduceResult {
  MorphismField<Scalar> restricted;
  InvariantRecord class_of_original;
  InvariantRecord class_of_restricted;
  bool equal = false;
};

/// Lemma-level reduction: restrict L to E(L,V) -> V and check that the index
/// class is unchanged.
template <class Scalar>
inline ReduceResult<Scalar> reduce_morphism(const MorphismField<Scalar>& morphism,
                                            const ProjectionField<Scalar>& transversal,
                                            const ToleranceConfig& cfg) {
  const auto kernel = kernel_bundle(morphism, transversal, cfg);
  ReduceResult<Scalar> result{
      restrict_morphism(morphism, kernel, transversal, cfg), {}, {}, false};
  result.class_of_original = index_class(morphism, cfg).reduced;
  result.class_of_restricted = index_class(result.restricted, cfg).reduced;
  result.equal = (result.class_of_original == result.class_of_restricted);
  if (!result.equal) {
    throw Error(ErrorCode::well_definedness_violation,
                "reduction changed the index class: " +
                    result.class_of_original.to_string() + " vs " +
                    result.class_of_restricted.to_string());
  }
  return result;
}

/// Stable triviality decision for a virtual bundle on a decidable base.
template <class Scalar>
inline TrivialityDecision is_stably_trivial(const VirtualBundle<Scalar>& virtual_bundle,
                                            const ToleranceConfig& cfg) {
  require_decidable_base(*virtual_bundle.plus.base,
                         ProjectionField<Scalar>::scalar);
  return decide_stably_trivial(virtual_bundle.recompute_record(cfg));
}

}  // namespace indexbundle
