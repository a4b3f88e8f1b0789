#pragma once

#include <unsupported/Eigen/MatrixFunctions>

#include <utility>
#include <vector>

#include "indexbundle/index_bundle.hpp"

namespace indexbundle {

/// Generators for randomized but edge-continuous test data. Every produced
/// field varies along the mesh through the smooth coordinate functions of the
/// base, so bundle validation passes by construction for moderate variation.

/// Smooth random unitary field U_x = exp(A_0 + sum_c coord_c(x) A_c).
template <class Scalar>
inline std::vector<Mat<Scalar>> random_unitary_field(const MeshPtr& mesh, int n,
                                                     double variation, Rng& rng) {
  const auto coords = smooth_coordinates(*mesh);
  const int n_coords = coords.empty() ? 0 : static_cast<int>(coords[0].size());
  std::vector<Mat<Scalar>> generators;
  generators.push_back(random_skew<Scalar>(n, 1.0, rng));  // constant part
  for (int c = 0; c < n_coords; ++c) {
    generators.push_back(random_skew<Scalar>(n, variation, rng));
  }
  std::vector<Mat<Scalar>> field(mesh->num_vertices);
  for (int v = 0; v < mesh->num_vertices; ++v) {
    Mat<Scalar> a = generators[0];
    for (int c = 0; c < n_coords; ++c) {
      a += coords[v][c] * generators[c + 1];
    }
    field[v] = a.exp();
  }
  return field;
}

/// Smooth random rank-r projection field in ambient K^n.
template <class Scalar>
inline ProjectionField<Scalar> random_projection_field(const MeshPtr& mesh, int n,
                                                       int rank, double variation,
                                                       Rng& rng) {
  const auto unitary = random_unitary_field<Scalar>(mesh, n, variation, rng);
  ProjectionField<Scalar> field;
  field.base = mesh;
  field.ambient_dim = n;
  field.proj.resize(mesh->num_vertices);
  for (int v = 0; v < mesh->num_vertices; ++v) {
    const Mat<Scalar> basis = unitary[v].leftCols(rank);
    field.proj[v] = basis * basis.adjoint();
  }
  return field;
}

/// Shape of a random Fredholm family. `dips` singular directions of the
/// restricted map pass through zero somewhere on the base, so kernels and
/// cokernels jump location while the numerical index stays fixed at
/// rank_domain - rank_target.
struct FamilyShape {
  int ambient_domain = 4;
  int rank_domain = 2;
  int ambient_target = 4;
  int rank_target = 2;
  int dips = 1;
  double variation = 0.35;
};

namespace detail {

/// Smooth scalar functions on the mesh: an affine combination of the smooth
/// coordinates. Scale keeps values in roughly [-scale, scale].
inline std::vector<double> smooth_scalar(const std::vector<std::vector<double>>& coords,
                                         double scale, double offset, Rng& rng) {
  const int n_coords = coords.empty() ? 0 : static_cast<int>(coords[0].size());
  std::vector<double> weights(n_coords);
  double norm = 0.0;
  for (double& w : weights) {
    w = rng.gaussian();
    norm += w * w;
  }
  norm = std::sqrt(std::max(norm, 1e-12));
  std::vector<double> values(coords.size());
  for (std::size_t v = 0; v < coords.size(); ++v) {
    double dot = 0.0;
    for (int c = 0; c < n_coords; ++c) dot += weights[c] * coords[v][c];
    values[v] = scale * dot / norm + offset;
  }
  return values;
}

/// Smooth scalar that vanishes exactly at a randomly pinned vertex, so the
/// singular direction it drives genuinely drops rank somewhere on the mesh.
inline std::vector<double> smooth_scalar_with_zero(
    const std::vector<std::vector<double>>& coords, double scale, Rng& rng) {
  auto values = smooth_scalar(coords, scale, 0.0, rng);
  const int pinned = rng.uniform_int(0, static_cast<int>(values.size()) - 1);
  const double shift = values[pinned];
  for (double& v : values) v -= shift;
  return values;
}

}  // namespace detail

/// Random Fredholm family between smooth random bundles with exact control of
/// the restricted singular values: L_x = W_x Delta_x U_x*, where the top-left
/// block of Delta_x holds a rotated diagonal with `dips` entries crossing
/// zero and the rest bounded away from it.
template <class Scalar>
inline MorphismField<Scalar> random_fredholm_family(const MeshPtr& mesh,
                                                    const FamilyShape& shape, Rng& rng,
                                                    const ToleranceConfig& cfg) {
  const auto coords = smooth_coordinates(*mesh);
  const auto u_field =
      random_unitary_field<Scalar>(mesh, shape.ambient_domain, shape.variation, rng);
  const auto w_field =
      random_unitary_field<Scalar>(mesh, shape.ambient_target, shape.variation, rng);

  ProjectionField<Scalar> domain, target;
  domain.base = target.base = mesh;
  domain.ambient_dim = shape.ambient_domain;
  target.ambient_dim = shape.ambient_target;
  domain.proj.resize(mesh->num_vertices);
  target.proj.resize(mesh->num_vertices);

  const int inner = std::min(shape.rank_domain, shape.rank_target);
  const int dips = std::min(shape.dips, inner);
  std::vector<std::vector<double>> diag(inner);
  for (int i = 0; i < dips; ++i) {
    diag[i] = detail::smooth_scalar_with_zero(coords, 1.0, rng);
  }
  for (int i = dips; i < inner; ++i) {
    diag[i] = detail::smooth_scalar(coords, 0.4, rng.uniform(1.0, 1.6), rng);
  }
  const auto left_rotation =
      random_unitary_field<Scalar>(mesh, shape.rank_target, shape.variation, rng);
  const auto right_rotation =
      random_unitary_field<Scalar>(mesh, shape.rank_domain, shape.variation, rng);

  std::vector<Mat<Scalar>> mats(mesh->num_vertices);
  for (int v = 0; v < mesh->num_vertices; ++v) {
    const Mat<Scalar> p_basis = u_field[v].leftCols(shape.rank_domain);
    const Mat<Scalar> q_basis = w_field[v].leftCols(shape.rank_target);
    domain.proj[v] = p_basis * p_basis.adjoint();
    target.proj[v] = q_basis * q_basis.adjoint();
    Mat<Scalar> inner_map =
        Mat<Scalar>::Zero(shape.rank_target, shape.rank_domain);
    for (int i = 0; i < inner; ++i) inner_map(i, i) = Scalar(diag[i][v]);
    inner_map = left_rotation[v] * inner_map * right_rotation[v].adjoint();
    mats[v] = q_basis * inner_map * p_basis.adjoint();
  }
  return make_morphism(domain, target, std::move(mats), cfg);
}

/// Random bundle isomorphism (restricted singular values bounded below).
template <class Scalar>
inline MorphismField<Scalar> random_isomorphism_family(const MeshPtr& mesh, int ambient,
                                                       int rank, Rng& rng,
                                                       const ToleranceConfig& cfg) {
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = ambient;
  shape.rank_domain = shape.rank_target = rank;
  shape.dips = 0;
  return random_fredholm_family<Scalar>(mesh, shape, rng, cfg);
}

/// Index-zero family over full trivial bundles (domain = target = ambient),
/// the setting of the classical construction.
template <class Scalar>
inline MorphismField<Scalar> random_trivial_bundle_family(const MeshPtr& mesh,
                                                          int ambient, int dips,
                                                          Rng& rng,
                                                          const ToleranceConfig& cfg) {
  FamilyShape shape;
  shape.ambient_domain = shape.ambient_target = ambient;
  shape.rank_domain = shape.rank_target = ambient;
  shape.dips = dips;
  return random_fredholm_family<Scalar>(mesh, shape, rng, cfg);
}

/// Composable pair (L, M) sharing the middle bundle, for the logarithmic law.
template <class Scalar>
inline std::pair<MorphismField<Scalar>, MorphismField<Scalar>> random_composable_pair(
    const MeshPtr& mesh, Rng& rng, const ToleranceConfig& cfg) {
  const int n_e = rng.uniform_int(3, 5);
  const int n_f = rng.uniform_int(3, 5);
  const int n_g = rng.uniform_int(3, 5);
  const int r_f = rng.uniform_int(2, n_f);
  const int r_e = rng.uniform_int(2, std::min(n_e, r_f + 1));
  const int r_g = rng.uniform_int(2, std::min(n_g, r_f + 1));

  const auto u_field = random_unitary_field<Scalar>(mesh, n_e, 0.3, rng);
  const auto w_field = random_unitary_field<Scalar>(mesh, n_f, 0.3, rng);
  const auto y_field = random_unitary_field<Scalar>(mesh, n_g, 0.3, rng);
  const auto coords = smooth_coordinates(*mesh);

  auto bundle_from = [&](const std::vector<Mat<Scalar>>& unitary, int ambient,
                         int rank) {
    ProjectionField<Scalar> field;
    field.base = mesh;
    field.ambient_dim = ambient;
    field.proj.resize(mesh->num_vertices);
    for (int v = 0; v < mesh->num_vertices; ++v) {
      const Mat<Scalar> basis = unitary[v].leftCols(rank);
      field.proj[v] = basis * basis.adjoint();
    }
    return field;
  };
  const auto bundle_e = bundle_from(u_field, n_e, r_e);
  const auto bundle_f = bundle_from(w_field, n_f, r_f);
  const auto bundle_g = bundle_from(y_field, n_g, r_g);

  auto inner_diag = [&](int rows, int cols) {
    const int k = std::min(rows, cols);
    std::vector<std::vector<double>> d(k);
    d[0] = detail::smooth_scalar_with_zero(coords, 1.0, rng);
    for (int i = 1; i < k; ++i) {
      d[i] = detail::smooth_scalar(coords, 0.4, rng.uniform(1.0, 1.6), rng);
    }
    return d;
  };
  const auto diag_l = inner_diag(r_f, r_e);
  const auto diag_m = inner_diag(r_g, r_f);

  std::vector<Mat<Scalar>> mats_l(mesh->num_vertices), mats_m(mesh->num_vertices);
  for (int v = 0; v < mesh->num_vertices; ++v) {
    Mat<Scalar> inner_l = Mat<Scalar>::Zero(r_f, r_e);
    for (std::size_t i = 0; i < diag_l.size(); ++i) {
      inner_l(static_cast<int>(i), static_cast<int>(i)) = Scalar(diag_l[i][v]);
    }
    Mat<Scalar> inner_m = Mat<Scalar>::Zero(r_g, r_f);
    for (std::size_t i = 0; i < diag_m.size(); ++i) {
      inner_m(static_cast<int>(i), static_cast<int>(i)) = Scalar(diag_m[i][v]);
    }
    mats_l[v] = w_field[v].leftCols(r_f) * inner_l *
                u_field[v].leftCols(r_e).adjoint();
    mats_m[v] = y_field[v].leftCols(r_g) * inner_m *
                w_field[v].leftCols(r_f).adjoint();
  }
  auto morphism_l = make_morphism(bundle_e, bundle_f, std::move(mats_l), cfg);
  auto morphism_m = make_morphism(bundle_f, bundle_g, std::move(mats_m), cfg);
  return {std::move(morphism_l), std::move(morphism_m)};
}

/// Family with a known stably trivial class: an isomorphism plus a random
/// compact perturbation.
template <class Scalar>
inline MorphismField<Scalar> random_stably_trivial_family(const MeshPtr& mesh,
                                                          int ambient, int rank,
                                                          Rng& rng,
                                                          const ToleranceConfig& cfg) {
  auto base = random_isomorphism_family<Scalar>(mesh, ambient, rank, rng, cfg);
  const auto perturbation = random_compact_perturbation(
      base, std::min(rank, 2), 0.35, rng.bits(), cfg);
  return add(base, perturbation, cfg);
}

}  // namespace indexbundle
