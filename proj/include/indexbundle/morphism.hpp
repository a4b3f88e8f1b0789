#pragma once

#include <climits>
#include <string>
#include <vector>

#include "indexbundle/bundle.hpp"

namespace indexbundle {

/// A Fredholm morphism between projection-field bundles: one target-ambient by
/// domain-ambient matrix per vertex, intertwined with both projector fields
/// (Q L P = L). The numerical index rank(P) - rank(Q) is constant on every
/// connected component.
template <class Scalar>
struct MorphismField {
  using ScalarType = Scalar;

  ProjectionField<Scalar> domain;
  ProjectionField<Scalar> target;
  std::vector<Mat<Scalar>> mats;

  const Mat<Scalar>& at(int v) const { return mats[v]; }

  int index_at(int v, const ToleranceConfig& cfg) const {
    return domain.rank_at(v, cfg) - target.rank_at(v, cfg);
  }

  double max_norm() const {
    double norm = 0.0;
    for (const auto& m : mats) norm = std::max(norm, spectral_norm(m));
    return norm;
  }
};

/// Builds a morphism from raw per-vertex matrices. Intertwining is enforced by
/// projection (mats <- Q mats P); the worst enforcement residual is available
/// from the returned field only through revalidation, callers that care pass
/// clean input.
template <class Scalar>
inline MorphismField<Scalar> make_morphism(const ProjectionField<Scalar>& domain,
                                           const ProjectionField<Scalar>& target,
                                           std::vector<Mat<Scalar>> mats,
                                           const ToleranceConfig& cfg) {
  if (!domain.same_base(target)) {
    throw Error(ErrorCode::invalid_morphism, "domain and target base meshes differ");
  }
  if (mats.size() != domain.proj.size()) {
    throw Error(ErrorCode::shape_mismatch, "one matrix per vertex required");
  }
  MorphismField<Scalar> morphism;
  morphism.domain = domain;
  morphism.target = target;
  morphism.mats.resize(mats.size());
  parallel_for(static_cast<int>(mats.size()), cfg.threads, [&](int v) {
    const Mat<Scalar>& raw = mats[v];
    if (raw.rows() != target.ambient_dim || raw.cols() != domain.ambient_dim) {
      throw Error(ErrorCode::shape_mismatch,
                  "matrix shape mismatch at vertex " + std::to_string(v));
    }
    morphism.mats[v] = target.proj[v] * raw * domain.proj[v];
  });

  const auto comp = domain.base->components();
  std::vector<int> comp_index(domain.base->component_count(), INT_MIN);
  for (int v = 0; v < domain.base->num_vertices; ++v) {
    const int idx = morphism.index_at(v, cfg);
    int& stored = comp_index[comp[v]];
    if (stored == INT_MIN) stored = idx;
    if (stored != idx) {
      throw Error(ErrorCode::invalid_morphism,
                  "numerical index jumps within a component at vertex " +
                      std::to_string(v));
    }
  }
  if (cfg.morphism_edge_check) {
    const double bound = (1.0 - cfg.delta_edge) * std::max(morphism.max_norm(), 1.0);
    for (const auto& e : domain.base->edges) {
      const double jump =
          spectral_norm<Scalar>(morphism.mats[e[0]] - morphism.mats[e[1]]);
      if (jump > bound) {
        throw Error(ErrorCode::invalid_morphism,
                    "morphism jump " + std::to_string(jump) + " on edge (" +
                        std::to_string(e[0]) + "," + std::to_string(e[1]) + ")");
      }
    }
  }
  return morphism;
}

template <class Scalar>
inline MorphismField<Scalar> identity_morphism(const ProjectionField<Scalar>& bundle,
                                               const ToleranceConfig& cfg) {
  std::vector<Mat<Scalar>> mats(bundle.proj.size(),
                                Mat<Scalar>::Identity(bundle.ambient_dim,
                                                      bundle.ambient_dim));
  return make_morphism(bundle, bundle, std::move(mats), cfg);
}

/// Fields must agree within tolerance for composition / restriction plumbing.
template <class Scalar>
inline bool fields_agree(const ProjectionField<Scalar>& a,
                         const ProjectionField<Scalar>& b, double tol) {
  if (!a.same_base(b) || a.ambient_dim != b.ambient_dim) return false;
  for (std::size_t v = 0; v < a.proj.size(); ++v) {
    if (spectral_norm<Scalar>(a.proj[v] - b.proj[v]) > tol) return false;
  }
  return true;
}

template <class Scalar>
inline MorphismField<Scalar> compose(const MorphismField<Scalar>& outer,
                                     const MorphismField<Scalar>& inner,
                                     const ToleranceConfig& cfg) {
  if (!fields_agree(inner.target, outer.domain, cfg.tau_nest)) {
    throw Error(ErrorCode::invalid_morphism,
                "composition: middle bundles do not match");
  }
  std::vector<Mat<Scalar>> mats(inner.mats.size());
  for (std::size_t v = 0; v < mats.size(); ++v) {
    mats[v] = outer.mats[v] * inner.mats[v];
  }
  return make_morphism(inner.domain, outer.target, std::move(mats), cfg);
}

template <class Scalar>
inline MorphismField<Scalar> direct_sum_morphism(const MorphismField<Scalar>& a,
                                                 const MorphismField<Scalar>& b,
                                                 const ToleranceConfig& cfg) {
  if (!a.domain.same_base(b.domain)) {
    throw Error(ErrorCode::invalid_morphism, "direct sum needs a common base");
  }
  const auto domain = direct_sum(a.domain, b.domain);
  const auto target = direct_sum(a.target, b.target);
  std::vector<Mat<Scalar>> mats(a.mats.size());
  for (std::size_t v = 0; v < mats.size(); ++v) {
    Mat<Scalar> block = Mat<Scalar>::Zero(target.ambient_dim, domain.ambient_dim);
    block.topLeftCorner(a.target.ambient_dim, a.domain.ambient_dim) = a.mats[v];
    block.bottomRightCorner(b.target.ambient_dim, b.domain.ambient_dim) = b.mats[v];
    mats[v] = std::move(block);
  }
  return make_morphism(domain, target, std::move(mats), cfg);
}

template <class Scalar>
inline MorphismField<Scalar> pullback_morphism(const MeshMap& map,
                                               const MorphismField<Scalar>& morphism,
                                               const ToleranceConfig& cfg) {
  const auto domain = pullback_bundle(map, morphism.domain);
  const auto target = pullback_bundle(map, morphism.target);
  std::vector<Mat<Scalar>> mats(map.source->num_vertices);
  for (int v = 0; v < map.source->num_vertices; ++v) {
    mats[v] = morphism.mats[map(v)];
  }
  return make_morphism(domain, target, std::move(mats), cfg);
}

/// Smooth random finite-rank field intertwined with the endpoints of L; the
/// desk-scale stand-in for a fibrewise compact perturbation. Reproducible from
/// the seed.
template <class Scalar>
inline MorphismField<Scalar> random_compact_perturbation(
    const MorphismField<Scalar>& reference, int rank_bound, double magnitude,
    std::uint64_t seed, const ToleranceConfig& cfg) {
  const int m = reference.domain.ambient_dim;
  const int n = reference.target.ambient_dim;
  if (rank_bound < 0 || rank_bound > std::min(m, n)) {
    throw Error(ErrorCode::invalid_morphism, "rank bound outside [0, min(M,N)]");
  }
  const int vertices = reference.domain.base->num_vertices;
  std::vector<Mat<Scalar>> mats(vertices, Mat<Scalar>::Zero(n, m));
  if (rank_bound > 0 && magnitude > 0.0) {
    Rng rng(seed);
    std::vector<Vec<Scalar>> left(rank_bound), right(rank_bound);
    for (int r = 0; r < rank_bound; ++r) {
      left[r] = random_gaussian_matrix<Scalar>(n, 1, rng);
      right[r] = random_gaussian_matrix<Scalar>(m, 1, rng);
    }
    double max_norm = 0.0;
    for (int v = 0; v < vertices; ++v) {
      Mat<Scalar> k = Mat<Scalar>::Zero(n, m);
      for (int r = 0; r < rank_bound; ++r) {
        const Vec<Scalar> a = reference.target.proj[v] * left[r];
        const Vec<Scalar> b = reference.domain.proj[v] * right[r];
        k += (1.0 / (r + 1)) * (a * b.adjoint());
      }
      mats[v] = k;
      max_norm = std::max(max_norm, spectral_norm(k));
    }
    if (max_norm > 0.0) {
      for (auto& k : mats) k *= magnitude / max_norm;
    }
  }
  return make_morphism(reference.domain, reference.target, std::move(mats), cfg);
}

template <class Scalar>
inline MorphismField<Scalar> add(const MorphismField<Scalar>& a,
                                 const MorphismField<Scalar>& b,
                                 const ToleranceConfig& cfg) {
  if (!fields_agree(a.domain, b.domain, cfg.tau_nest) ||
      !fields_agree(a.target, b.target, cfg.tau_nest)) {
    throw Error(ErrorCode::invalid_morphism, "sum: endpoint bundles differ");
  }
  std::vector<Mat<Scalar>> mats(a.mats.size());
  for (std::size_t v = 0; v < mats.size(); ++v) mats[v] = a.mats[v] + b.mats[v];
  return make_morphism(a.domain, a.target, std::move(mats), cfg);
}

/// Restriction to subbundles on both sides. Requires L to map im(E') into
/// im(F') within tau_restrict * ||L||.
template <class Scalar>
inline MorphismField<Scalar> restrict_morphism(const MorphismField<Scalar>& morphism,
                                               const ProjectionField<Scalar>& sub_domain,
                                               const ProjectionField<Scalar>& sub_target,
                                               const ToleranceConfig& cfg) {
  const double norm = std::max(morphism.max_norm(), 1e-300);
  double worst = 0.0;
  int worst_vertex = -1;
  const int n = morphism.target.ambient_dim;
  for (std::size_t v = 0; v < morphism.mats.size(); ++v) {
    const double nest_dom = spectral_norm<Scalar>(
        morphism.domain.proj[v] * sub_domain.proj[v] - sub_domain.proj[v]);
    const double nest_tgt = spectral_norm<Scalar>(
        morphism.target.proj[v] * sub_target.proj[v] - sub_target.proj[v]);
    if (nest_dom > cfg.tau_nest || nest_tgt > cfg.tau_nest) {
      throw Error(ErrorCode::not_a_subbundle,
                  "restriction endpoints not nested at vertex " + std::to_string(v));
    }
    const Mat<Scalar> escape =
        (Mat<Scalar>::Identity(n, n) - sub_target.proj[v]) * morphism.mats[v] *
        sub_domain.proj[v];
    const double residual = spectral_norm(escape);
    if (residual > worst) {
      worst = residual;
      worst_vertex = static_cast<int>(v);
    }
  }
  if (worst > cfg.tau_restrict * norm) {
    throw Error(ErrorCode::image_escape,
                "image escapes the target subbundle, worst vertex " +
                    std::to_string(worst_vertex) + " (residual " +
                    std::to_string(worst) + ")");
  }
  return make_morphism(sub_domain, sub_target, morphism.mats, cfg);
}

/// Projector field onto the fibrewise images of L inside the target bundle.
/// Defined when the kernel dimension (hence the image rank) is constant per
/// component.
template <class Scalar>
inline ProjectionField<Scalar> image_bundle(const MorphismField<Scalar>& morphism,
                                            const ToleranceConfig& cfg) {
  const BaseMesh& mesh = *morphism.domain.base;
  ProjectionField<Scalar> out;
  out.base = morphism.domain.base;
  out.ambient_dim = morphism.target.ambient_dim;
  out.proj.resize(mesh.num_vertices);
  std::vector<int> image_rank(mesh.num_vertices, 0);
  const double family_scale = std::max(morphism.max_norm(), 1e-300);
  parallel_for(mesh.num_vertices, cfg.threads, [&](int v) {
    const Mat<Scalar> basis = image_basis(morphism.mats[v], cfg, family_scale);
    image_rank[v] = static_cast<int>(basis.cols());
    out.proj[v] = projector_onto(basis);
  });
  const auto comp = mesh.components();
  std::vector<int> comp_rank(mesh.component_count(), -1);
  std::string offenders;
  for (int v = 0; v < mesh.num_vertices; ++v) {
    int& r = comp_rank[comp[v]];
    if (r == -1) r = image_rank[v];
    if (r != image_rank[v]) offenders += " " + std::to_string(v);
  }
  if (!offenders.empty()) {
    throw Error(ErrorCode::not_a_bundle,
                "kernel dimension jumps across a component; vertices:" + offenders);
  }
  return out;
}

}  // namespace indexbundle
