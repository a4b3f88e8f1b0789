#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "indexbundle/linalg.hpp"
#include "indexbundle/mesh.hpp"

namespace indexbundle {

/// A vector bundle presented as a vertex-indexed field of Hermitian
/// idempotents inside the trivial ambient bundle K^N. Fibres over adjacent
/// vertices stay canonically comparable as long as every edge gap
/// ||P_x - P_y|| keeps away from 1.
template <class Scalar>
struct ProjectionField {
  using ScalarType = Scalar;

  MeshPtr base;
  int ambient_dim = 0;
  std::vector<Mat<Scalar>> proj;

  static constexpr ScalarKind scalar = scalar_kind<Scalar>();

  const Mat<Scalar>& at(int v) const { return proj[v]; }

  int rank_at(int v, const ToleranceConfig&) const {
    return projector_rank(proj[v]);
  }

  bool same_base(const ProjectionField& other) const {
    return base == other.base || (base && other.base && *base == *other.base);
  }
};

/// Constant field of one projector (the trivial bundle of its image).
template <class Scalar>
inline ProjectionField<Scalar> constant_field(const MeshPtr& mesh,
                                              const Mat<Scalar>& projector) {
  ProjectionField<Scalar> field;
  field.base = mesh;
  field.ambient_dim = static_cast<int>(projector.rows());
  field.proj.assign(mesh->num_vertices, projector);
  return field;
}

/// Theta(K^r) embedded in ambient K^n: projector onto the first r coordinates.
template <class Scalar>
inline ProjectionField<Scalar> trivial_field(const MeshPtr& mesh, int ambient_dim,
                                             int rank) {
  Mat<Scalar> p = Mat<Scalar>::Zero(ambient_dim, ambient_dim);
  for (int i = 0; i < rank; ++i) p(i, i) = Scalar(1);
  return constant_field(mesh, p);
}

/// k pointwise independent sections of a bundle, stored as the columns of one
/// ambient-by-k matrix per vertex.
template <class Scalar>
struct FrameSet {
  std::vector<Mat<Scalar>> sections;

  int count() const { return sections.empty() ? 0 : static_cast<int>(sections[0].cols()); }
};

struct BundleValidation {
  bool pass = false;
  double max_idem_residual = 0.0;
  double max_herm_residual = 0.0;
  double max_edge_gap = 0.0;
  int worst_idem_vertex = -1;
  int worst_edge_a = -1;
  int worst_edge_b = -1;
  std::vector<int> vertex_rank;
  std::vector<int> component_rank;
  std::vector<std::string> failures;

  std::string summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "fail") << " idem=" << max_idem_residual
       << " herm=" << max_herm_residual << " gap=" << max_edge_gap;
    for (const auto& f : failures) os << "; " << f;
    return os.str();
  }
};

/// Checks the three bundle invariants: Hermitian idempotency within tau_idem,
/// rank constancy per connected component, and edge gaps below 1 - delta_edge.
template <class Scalar>
inline BundleValidation validate_bundle(const ProjectionField<Scalar>& field,
                                        const ToleranceConfig& cfg) {
  BundleValidation report;
  if (!field.base) throw Error(ErrorCode::shape_mismatch, "field has no base mesh");
  const BaseMesh& mesh = *field.base;
  if (static_cast<int>(field.proj.size()) != mesh.num_vertices) {
    throw Error(ErrorCode::shape_mismatch, "one projector per vertex required");
  }
  const int n = field.ambient_dim;
  for (const auto& p : field.proj) {
    if (p.rows() != n || p.cols() != n) {
      throw Error(ErrorCode::shape_mismatch, "projector is not ambient x ambient");
    }
  }

  const int V = mesh.num_vertices;
  report.vertex_rank.assign(V, 0);
  std::vector<double> idem(V, 0.0), herm(V, 0.0);
  parallel_for(V, cfg.threads, [&](int v) {
    const Mat<Scalar>& p = field.proj[v];
    idem[v] = spectral_norm<Scalar>(p * p - p);
    herm[v] = spectral_norm<Scalar>(p - p.adjoint());
    report.vertex_rank[v] = projector_rank(p);
  });
  for (int v = 0; v < V; ++v) {
    if (idem[v] > report.max_idem_residual) {
      report.max_idem_residual = idem[v];
      report.worst_idem_vertex = v;
    }
    report.max_herm_residual = std::max(report.max_herm_residual, herm[v]);
  }
  if (report.max_idem_residual > cfg.tau_idem) {
    report.failures.push_back("idempotency residual " +
                              std::to_string(report.max_idem_residual) +
                              " at vertex " + std::to_string(report.worst_idem_vertex));
  }
  if (report.max_herm_residual > cfg.tau_idem) {
    report.failures.push_back("hermiticity residual " +
                              std::to_string(report.max_herm_residual));
  }

  const auto comp = mesh.components();
  const int n_comp = mesh.component_count();
  report.component_rank.assign(n_comp, -1);
  for (int v = 0; v < V; ++v) {
    int& r = report.component_rank[comp[v]];
    if (r == -1) r = report.vertex_rank[v];
    if (r != report.vertex_rank[v]) {
      report.failures.push_back("rank jumps within component at vertex " +
                                std::to_string(v));
      r = report.vertex_rank[v];
    }
  }

  for (const auto& e : mesh.edges) {
    const double gap = spectral_norm<Scalar>(field.proj[e[0]] - field.proj[e[1]]);
    if (gap > report.max_edge_gap) {
      report.max_edge_gap = gap;
      report.worst_edge_a = e[0];
      report.worst_edge_b = e[1];
    }
  }
  if (report.max_edge_gap > 1.0 - cfg.delta_edge) {
    report.failures.push_back(
        "edge gap " + std::to_string(report.max_edge_gap) + " on edge (" +
        std::to_string(report.worst_edge_a) + "," +
        std::to_string(report.worst_edge_b) + ") exceeds 1-delta");
  }

  report.pass = report.failures.empty();
  return report;
}

template <class Scalar>
inline void require_valid_bundle(const ProjectionField<Scalar>& field,
                                 const ToleranceConfig& cfg, const char* what) {
  const auto report = validate_bundle(field, cfg);
  if (!report.pass) {
    throw Error(ErrorCode::not_a_bundle,
                std::string(what) + " failed validation: " + report.summary());
  }
}

/// Orthogonal projector field onto the pointwise span of the given generators.
/// generators[v] is an ambient x k matrix of spanning vectors at vertex v.
template <class Scalar>
inline ProjectionField<Scalar> subbundle_span(const MeshPtr& mesh, int ambient_dim,
                                              const std::vector<Mat<Scalar>>& generators,
                                              const ToleranceConfig& cfg) {
  if (!mesh) throw Error(ErrorCode::shape_mismatch, "null mesh");
  if (static_cast<int>(generators.size()) != mesh->num_vertices) {
    throw Error(ErrorCode::shape_mismatch, "one generator set per vertex required");
  }
  const int k = generators.empty() ? 0 : static_cast<int>(generators[0].cols());
  ProjectionField<Scalar> field;
  field.base = mesh;
  field.ambient_dim = ambient_dim;
  field.proj.resize(mesh->num_vertices);
  parallel_for(mesh->num_vertices, cfg.threads, [&](int v) {
    const Mat<Scalar>& g = generators[v];
    if (g.rows() != ambient_dim || g.cols() != k) {
      throw Error(ErrorCode::shape_mismatch,
                  "generator shape mismatch at vertex " + std::to_string(v));
    }
    const Mat<Scalar> basis = image_basis(g, cfg);
    if (basis.cols() != k) {
      throw Error(ErrorCode::degenerate_span,
                  "generators lose rank at vertex " + std::to_string(v));
    }
    field.proj[v] = projector_onto(basis);
  });
  return field;
}

/// Orthogonal complement of `sub` inside `within` (fibrewise). `within`
/// defaults to the full ambient bundle.
template <class Scalar>
inline ProjectionField<Scalar> complement(
    const ProjectionField<Scalar>& sub,
    const std::optional<ProjectionField<Scalar>>& within, const ToleranceConfig& cfg) {
  const ProjectionField<Scalar> ambient =
      within ? *within : trivial_field<Scalar>(sub.base, sub.ambient_dim, sub.ambient_dim);
  if (!sub.same_base(ambient) || sub.ambient_dim != ambient.ambient_dim) {
    throw Error(ErrorCode::shape_mismatch, "complement: base or ambient mismatch");
  }
  ProjectionField<Scalar> out;
  out.base = sub.base;
  out.ambient_dim = sub.ambient_dim;
  out.proj.resize(sub.proj.size());
  parallel_for(static_cast<int>(sub.proj.size()), cfg.threads, [&](int v) {
    const Mat<Scalar>& p = sub.proj[v];
    const Mat<Scalar>& q = ambient.proj[v];
    const double nesting = spectral_norm<Scalar>(q * p - p);
    if (nesting > cfg.tau_nest) {
      throw Error(ErrorCode::not_a_subbundle,
                  "range nesting violated at vertex " + std::to_string(v) +
                      " (residual " + std::to_string(nesting) + ")");
    }
    const Mat<Scalar> q_basis = fibre_basis(q);
    const Mat<Scalar> residual =
        (Mat<Scalar>::Identity(out.ambient_dim, out.ambient_dim) - p) * q_basis;
    const Mat<Scalar> basis = image_basis(residual, cfg, 1.0);
    out.proj[v] = projector_onto(basis);
  });
  return out;
}

/// Block-diagonal embedding into ambient K^{N_A + N_B}; ranks add.
template <class Scalar>
inline ProjectionField<Scalar> direct_sum(const ProjectionField<Scalar>& a,
                                          const ProjectionField<Scalar>& b) {
  if (!a.same_base(b)) {
    throw Error(ErrorCode::shape_mismatch, "direct sum needs a common base mesh");
  }
  ProjectionField<Scalar> out;
  out.base = a.base;
  out.ambient_dim = a.ambient_dim + b.ambient_dim;
  out.proj.resize(a.proj.size());
  for (std::size_t v = 0; v < a.proj.size(); ++v) {
    Mat<Scalar> block = Mat<Scalar>::Zero(out.ambient_dim, out.ambient_dim);
    block.topLeftCorner(a.ambient_dim, a.ambient_dim) = a.proj[v];
    block.bottomRightCorner(b.ambient_dim, b.ambient_dim) = b.proj[v];
    out.proj[v] = std::move(block);
  }
  return out;
}

/// (f*E)_y = E_{f(y)}.
template <class Scalar>
inline ProjectionField<Scalar> pullback_bundle(const MeshMap& map,
                                               const ProjectionField<Scalar>& field) {
  if (!field.base || !map.target || !(*field.base == *map.target)) {
    throw Error(ErrorCode::shape_mismatch, "pullback: field not based on map target");
  }
  ProjectionField<Scalar> out;
  out.base = map.source;
  out.ambient_dim = field.ambient_dim;
  out.proj.resize(map.source->num_vertices);
  for (int v = 0; v < map.source->num_vertices; ++v) {
    out.proj[v] = field.proj[map(v)];
  }
  return out;
}

template <class Scalar>
inline void validate_frame(const ProjectionField<Scalar>& bundle,
                           const FrameSet<Scalar>& frame, const ToleranceConfig& cfg) {
  if (frame.sections.size() != bundle.proj.size()) {
    throw Error(ErrorCode::shape_mismatch, "frame/vertex count mismatch");
  }
  const int k = frame.count();
  for (std::size_t v = 0; v < frame.sections.size(); ++v) {
    const Mat<Scalar>& s = frame.sections[v];
    if (s.rows() != bundle.ambient_dim || s.cols() != k) {
      throw Error(ErrorCode::shape_mismatch,
                  "frame shape mismatch at vertex " + std::to_string(v));
    }
    if (k == 0) continue;
    const double inside = spectral_norm<Scalar>(bundle.proj[v] * s - s);
    if (inside > cfg.tau_idem * 100.0 + 1e-12) {
      throw Error(ErrorCode::not_a_subbundle,
                  "frame leaves the bundle at vertex " + std::to_string(v));
    }
    const double tol = cfg.rank_tolerance(spectral_norm(s), bundle.ambient_dim);
    if (smallest_singular_value(s) < tol) {
      throw Error(ErrorCode::degenerate_span,
                  "frame loses independence at vertex " + std::to_string(v));
    }
  }
}

/// Extension of pointwise independent sections from a set of vertices D to the
/// whole mesh. Needs rank(E) >= k + slack on every component; the slack is the
/// finite-rank surrogate for an infinite-dimensional fibre, and with slack 0
/// the extension problem can be topologically obstructed (Moebius).
///
/// The extension is a greedy breadth-first transport: candidate sections are
/// projected across each edge, and when transport degrades their independence
/// a seeded random in-fibre correction is retried a bounded number of times.
template <class Scalar>
inline FrameSet<Scalar> extend_frame(const ProjectionField<Scalar>& bundle,
                                     const std::vector<int>& domain_vertices,
                                     const std::vector<Mat<Scalar>>& domain_sections,
                                     int k, const ToleranceConfig& cfg) {
  const BaseMesh& mesh = *bundle.base;
  if (domain_vertices.size() != domain_sections.size()) {
    throw Error(ErrorCode::shape_mismatch, "partial frame data mismatch");
  }
  const auto comp = mesh.components();
  const int n_comp = mesh.component_count();
  {
    std::vector<int> comp_rank(n_comp, -1);
    for (int v = 0; v < mesh.num_vertices; ++v) {
      if (comp_rank[comp[v]] == -1) comp_rank[comp[v]] = bundle.rank_at(v, cfg);
    }
    for (int c = 0; c < n_comp; ++c) {
      if (comp_rank[c] < k + cfg.frame_slack) {
        throw Error(ErrorCode::rank_slack,
                    "component " + std::to_string(c) + " has rank " +
                        std::to_string(comp_rank[c]) + " < k + slack = " +
                        std::to_string(k + cfg.frame_slack));
      }
    }
  }

  FrameSet<Scalar> frame;
  frame.sections.assign(mesh.num_vertices, Mat<Scalar>());
  std::vector<char> fixed(mesh.num_vertices, 0);
  std::vector<int> queue;
  for (std::size_t i = 0; i < domain_vertices.size(); ++i) {
    const int v = domain_vertices[i];
    if (v < 0 || v >= mesh.num_vertices) {
      throw Error(ErrorCode::shape_mismatch, "partial frame vertex out of range");
    }
    const Mat<Scalar>& s = domain_sections[i];
    if (s.rows() != bundle.ambient_dim || s.cols() != k) {
      throw Error(ErrorCode::shape_mismatch, "partial section shape mismatch");
    }
    if (spectral_norm<Scalar>(bundle.proj[v] * s - s) > cfg.tau_idem * 100.0 + 1e-12) {
      throw Error(ErrorCode::not_a_subbundle,
                  "partial section leaves the bundle at vertex " + std::to_string(v));
    }
    const double tol = cfg.rank_tolerance(std::max(spectral_norm(s), 1.0),
                                          bundle.ambient_dim);
    if (k > 0 && smallest_singular_value(s) < tol) {
      throw Error(ErrorCode::degenerate_span,
                  "partial sections dependent at vertex " + std::to_string(v));
    }
    frame.sections[v] = s;
    fixed[v] = 1;
    queue.push_back(v);
  }

  std::vector<std::vector<int>> adjacency(mesh.num_vertices);
  for (const auto& e : mesh.edges) {
    adjacency[e[0]].push_back(e[1]);
    adjacency[e[1]].push_back(e[0]);
  }

  Rng rng(cfg.seed);
  auto seed_component = [&](int c) {
    for (int v = 0; v < mesh.num_vertices; ++v) {
      if (comp[v] == c && !fixed[v]) {
        const Mat<Scalar> basis = fibre_basis(bundle.proj[v]);
        frame.sections[v] = basis.leftCols(k);
        fixed[v] = 1;
        queue.push_back(v);
        return;
      }
      if (comp[v] == c && fixed[v]) return;  // D already touches this component
    }
  };
  for (int c = 0; c < n_comp; ++c) seed_component(c);

  const double independence_tol =
      cfg.rank_tolerance(1.0, bundle.ambient_dim) * 10.0 + 1e-12;
  std::size_t head = 0;
  while (head < queue.size()) {
    const int x = queue[head++];
    for (int y : adjacency[x]) {
      if (fixed[y]) continue;
      Mat<Scalar> candidate = bundle.proj[y] * frame.sections[x];
      bool ok = (k == 0) || smallest_singular_value(candidate) > independence_tol;
      for (int attempt = 0; !ok && attempt < cfg.extension_retries; ++attempt) {
        const Mat<Scalar> noise =
            bundle.proj[y] * random_gaussian_matrix<Scalar>(bundle.ambient_dim, k, rng);
        const double scale = 0.2 * (attempt + 1) / cfg.extension_retries;
        candidate = bundle.proj[y] * frame.sections[x] + scale * noise;
        ok = smallest_singular_value(candidate) > independence_tol;
      }
      if (!ok) {
        throw Error(ErrorCode::extension_failure,
                    "could not keep sections independent at vertex " +
                        std::to_string(y) + " (seed " + std::to_string(cfg.seed) + ")");
      }
      frame.sections[y] = candidate;
      fixed[y] = 1;
      queue.push_back(y);
    }
  }

  validate_frame(bundle, frame, cfg);
  return frame;
}

}  // namespace indexbundle
