#pragma once

#include <optional>
#include <vector>

#include "indexbundle/bundle.hpp"

namespace indexbundle {

/// One deterministic orthonormal fibre frame per vertex (gauge choice).
/// Holonomy determinants computed from overlaps of these frames do not depend
/// on the choice.
template <class Scalar>
inline std::vector<Mat<Scalar>> vertex_frames(const ProjectionField<Scalar>& field,
                                              const ToleranceConfig& cfg) {
  std::vector<Mat<Scalar>> frames(field.proj.size());
  parallel_for(static_cast<int>(field.proj.size()), cfg.threads,
               [&](int v) { frames[v] = fibre_basis(field.proj[v]); });
  return frames;
}

/// Overlap of the fibre frames across an edge; nonsingular whenever the edge
/// gap stays below 1.
template <class Scalar>
inline Mat<Scalar> frame_overlap(const Mat<Scalar>& from, const Mat<Scalar>& to) {
  return from.adjoint() * to;
}

/// Determinant of the chain of overlaps around a closed walk. The sign (real
/// case) and phase (complex case) are gauge independent.
template <class Scalar>
inline Scalar loop_overlap_determinant(const std::vector<Mat<Scalar>>& frames,
                                       const std::vector<int>& walk,
                                       const ToleranceConfig& cfg) {
  Scalar det = Scalar(1);
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const int a = walk[i];
    const int b = walk[(i + 1) % walk.size()];
    const Mat<Scalar> overlap = frame_overlap(frames[a], frames[b]);
    if (overlap.rows() == 0) continue;  // rank-0 bundle, empty product
    const double smin = smallest_singular_value(overlap);
    if (smin <= cfg.rank_tolerance(1.0, static_cast<int>(overlap.rows())) * 10.0) {
      throw Error(ErrorCode::transport_undefined,
                  "fibres not comparable along walk step (" + std::to_string(a) +
                      "," + std::to_string(b) + ")");
    }
    det *= determinant(overlap);
  }
  return det;
}

/// Frames transported along a breadth-first spanning tree, per component.
/// Adjacent frames differ by nearly unitary overlaps with positive polar part
/// along tree edges; non-tree edges may retain curvature mismatch.
template <class Scalar>
inline std::vector<Mat<Scalar>> tree_transport_frames(
    const ProjectionField<Scalar>& field, const ToleranceConfig& cfg) {
  const BaseMesh& mesh = *field.base;
  std::vector<std::vector<int>> adjacency(mesh.num_vertices);
  for (const auto& e : mesh.edges) {
    adjacency[e[0]].push_back(e[1]);
    adjacency[e[1]].push_back(e[0]);
  }
  std::vector<Mat<Scalar>> frames(mesh.num_vertices);
  std::vector<char> done(mesh.num_vertices, 0);
  for (int root = 0; root < mesh.num_vertices; ++root) {
    if (done[root]) continue;
    frames[root] = fibre_basis(field.proj[root]);
    done[root] = 1;
    std::vector<int> queue = {root};
    std::size_t head = 0;
    while (head < queue.size()) {
      const int x = queue[head++];
      for (int y : adjacency[x]) {
        if (done[y]) continue;
        // project the parent frame into the child fibre, then orthonormalize
        frames[y] = polar_factor<Scalar>(field.proj[y] * frames[x]);
        done[y] = 1;
        queue.push_back(y);
      }
    }
  }
  return frames;
}

/// Tries to turn per-vertex frames into a global frame whose sections vary
/// slowly along every edge. Along each loop generator the total holonomy H is
/// distributed evenly: with cumulative transports Pi_i the re-gauged frame at
/// walk step i is F_i * Pi_i^* * H^{i/L}, which turns every loop-edge overlap
/// into H^{1/L}. Remaining vertices are transported outward from the loop.
/// A loop holonomy with negative determinant (real case) is a genuine
/// obstruction and yields nullopt.
template <class Scalar>
inline std::optional<FrameSet<Scalar>> extract_global_frame(
    const ProjectionField<Scalar>& field, const ToleranceConfig& cfg) {
  const BaseMesh& mesh = *field.base;
  std::vector<Mat<Scalar>> frames(mesh.num_vertices);
  std::vector<char> done(mesh.num_vertices, 0);
  const int r = mesh.num_vertices > 0 ? projector_rank(field.proj[0]) : 0;

  if (r > 0) {
    for (const auto& walk : mesh.loops) {
      const auto L = walk.size();
      std::vector<Mat<Scalar>> raw(L);
      for (std::size_t i = 0; i < L; ++i) {
        raw[i] = fibre_basis(field.proj[walk[i]]);
      }
      std::vector<Mat<Scalar>> cumulative(L + 1);
      cumulative[0] = Mat<Scalar>::Identity(r, r);
      for (std::size_t i = 0; i < L; ++i) {
        const Mat<Scalar> step =
            polar_factor<Scalar>(frame_overlap(raw[i], raw[(i + 1) % L]));
        cumulative[i + 1] = cumulative[i] * step;
      }
      const Mat<Scalar>& holonomy = cumulative[L];
      if constexpr (!is_complex_v<Scalar>) {
        if (std::real(determinant(holonomy)) < 0.0) return std::nullopt;
      }
      for (std::size_t i = 0; i < L; ++i) {
        if (done[walk[i]]) continue;  // repeated vertex: first visit wins
        const Mat<Scalar> twist = unitary_fractional_power<Scalar>(
            holonomy, static_cast<double>(i) / static_cast<double>(L));
        frames[walk[i]] = raw[i] * (cumulative[i].adjoint() * twist);
        done[walk[i]] = 1;
      }
    }
  }

  // transport outward from the smoothed loops; seed untouched components
  std::vector<std::vector<int>> adjacency(mesh.num_vertices);
  for (const auto& e : mesh.edges) {
    adjacency[e[0]].push_back(e[1]);
    adjacency[e[1]].push_back(e[0]);
  }
  std::vector<int> queue;
  for (int v = 0; v < mesh.num_vertices; ++v) {
    if (done[v]) queue.push_back(v);
  }
  const auto comp = mesh.components();
  std::vector<char> comp_touched(mesh.component_count(), 0);
  for (int v = 0; v < mesh.num_vertices; ++v) {
    if (done[v]) comp_touched[comp[v]] = 1;
  }
  for (int v = 0; v < mesh.num_vertices; ++v) {
    if (!done[v] && !comp_touched[comp[v]]) {
      frames[v] = fibre_basis(field.proj[v]);
      done[v] = 1;
      comp_touched[comp[v]] = 1;
      queue.push_back(v);
    }
  }
  std::size_t head = 0;
  while (head < queue.size()) {
    const int x = queue[head++];
    for (int y : adjacency[x]) {
      if (done[y]) continue;
      frames[y] = polar_factor<Scalar>(field.proj[y] * frames[x]);
      done[y] = 1;
      queue.push_back(y);
    }
  }

  FrameSet<Scalar> out;
  out.sections = std::move(frames);
  validate_frame(field, out, cfg);
  return out;
}

}  // namespace indexbundle
