#pragma once

#include <string>

#include "indexbundle/parametrix.hpp"

namespace indexbundle {

/// Family of two-point boundary value problems u' = f with
/// (u(0), u(1)) constrained to the fibres of a rank-n subbundle V of
/// Theta(K^{2n}), discretized on a uniform grid of s samples.
template <class Scalar>
struct BvpSpec {
  ProjectionField<Scalar> boundary_bundle;  // rank n inside ambient K^{2n}
  int n = 0;
  int grid = 0;  // sample count s

  void validate(const ToleranceConfig& cfg) const {
    if (n < 1 || boundary_bundle.ambient_dim != 2 * n) {
      throw Error(ErrorCode::invalid_spec,
                  "boundary bundle must live in ambient K^{2n}");
    }
    if (grid < 4) {
      throw Error(ErrorCode::invalid_spec, "grid needs at least 4 samples");
    }
    for (std::size_t v = 0; v < boundary_bundle.proj.size(); ++v) {
      if (boundary_bundle.rank_at(static_cast<int>(v), cfg) != n) {
        throw Error(ErrorCode::invalid_spec,
                    "boundary bundle rank != n at vertex " + std::to_string(v));
      }
    }
  }
};

/// Forward-difference derivative u -> s * (u_{j+1} - u_j) as a matrix from
/// K^{n s} to K^{n (s-1)}.
template <class Scalar>
inline Mat<Scalar> forward_difference_matrix(int n, int s) {
  Mat<Scalar> d = Mat<Scalar>::Zero(n * (s - 1), n * s);
  for (int j = 0; j + 1 < s; ++j) {
    for (int i = 0; i < n; ++i) {
      d(j * n + i, j * n + i) = Scalar(-static_cast<double>(s));
      d(j * n + i, (j + 1) * n + i) = Scalar(static_cast<double>(s));
    }
  }
  return d;
}

/// Domain bundle of the family: the kernel of u -> (I - P_V)(u_0, u_{s-1}),
/// a rank n*s - n subbundle of Theta(K^{n s}).
template <class Scalar>
inline ProjectionField<Scalar> bvp_domain_bundle(const BvpSpec<Scalar>& spec,
                                                 const ToleranceConfig& cfg) {
  const int n = spec.n;
  const int s = spec.grid;
  const int dim = n * s;
  const MeshPtr mesh = spec.boundary_bundle.base;
  ProjectionField<Scalar> domain;
  domain.base = mesh;
  domain.ambient_dim = dim;
  domain.proj.resize(mesh->num_vertices);
  Mat<Scalar> endpoints = Mat<Scalar>::Zero(2 * n, dim);
  endpoints.topLeftCorner(n, n) = Mat<Scalar>::Identity(n, n);
  endpoints.bottomRightCorner(n, n) = Mat<Scalar>::Identity(n, n);
  parallel_for(mesh->num_vertices, cfg.threads, [&](int v) {
    const Mat<Scalar> boundary_map =
        (Mat<Scalar>::Identity(2 * n, 2 * n) - spec.boundary_bundle.proj[v]) *
        endpoints;
    const Mat<Scalar> kernel = kernel_basis(boundary_map, cfg, 1.0);
    if (static_cast<int>(kernel.cols()) != dim - n) {
      throw Error(ErrorCode::invalid_spec,
                  "boundary condition does not cut codimension n at vertex " +
                      std::to_string(v));
    }
    domain.proj[v] = projector_onto(kernel);
  });
  return domain;
}

/// The discretized family: forward differences restricted to the domain
/// bundle, mapping onto the full Theta(K^{n(s-1)}). Fibrewise numerical index
/// (n s - n) - n (s - 1) = 0.
template <class Scalar>
inline MorphismField<Scalar> bvp_family(const BvpSpec<Scalar>& spec,
                                        const ToleranceConfig& cfg) {
  spec.validate(cfg);
  const int n = spec.n;
  const int s = spec.grid;
  const MeshPtr mesh = spec.boundary_bundle.base;
  const auto domain = bvp_domain_bundle(spec, cfg);
  const auto full_domain = trivial_field<Scalar>(mesh, n * s, n * s);
  const auto target = trivial_field<Scalar>(mesh, n * (s - 1), n * (s - 1));
  const Mat<Scalar> derivative = forward_difference_matrix<Scalar>(n, s);
  std::vector<Mat<Scalar>> mats(mesh->num_vertices, derivative);
  const auto unrestricted = make_morphism(full_domain, target, std::move(mats), cfg);
  return restrict_morphism(unrestricted, domain, target, cfg);
}

/// The class the theory predicts for the family: [V] - [Theta(K^n)].
template <class Scalar>
inline VirtualBundle<Scalar> bvp_expected_class(const BvpSpec<Scalar>& spec,
                                                const ToleranceConfig& cfg) {
  spec.validate(cfg);
  VirtualBundle<Scalar> expected;
  expected.plus = spec.boundary_bundle;
  expected.minus = trivial_field<Scalar>(spec.boundary_bundle.base, spec.n, spec.n);
  expected.reduced = reduce_virtual(expected.plus, expected.minus, cfg);
  return expected;
}

template <class Scalar>
struct BvpReport {
  InvariantRecord computed;
  InvariantRecord expected;
  bool classes_equal = false;
  bool stabilizable = false;
  double min_sv = 0.0;
  std::string certificate;
};

/// End-to-end check: the computed index class of the discretized family must
/// match [V] - [Theta(K^n)], and the parametrix outcome must agree with the
/// stable-triviality decision for V.
template <class Scalar>
inline BvpReport<Scalar> bvp_check(const BvpSpec<Scalar>& spec,
                                   const ToleranceConfig& cfg) {
  const auto family = bvp_family(spec, cfg);
  const auto computed = index_class(family, cfg);
  const auto expected = bvp_expected_class(spec, cfg);
  BvpReport<Scalar> report;
  report.computed = computed.reduced;
  report.expected = expected.reduced;
  report.classes_equal = (report.computed == report.expected);
  if (!report.classes_equal) {
    throw Error(ErrorCode::discretization_mismatch,
                "computed class " + report.computed.to_string() +
                    " != expected " + report.expected.to_string() +
                    "; refine the grid or the mesh");
  }
  const auto parametrix = build_parametrix(family, cfg);
  report.stabilizable = (parametrix.status == ParametrixStatus::built);
  report.min_sv = parametrix.min_sv;
  report.certificate = parametrix.certificate;
  const auto decision = is_stably_trivial(expected, cfg);
  if (decision.stably_trivial != report.stabilizable) {
    throw Error(ErrorCode::discretization_mismatch,
                "parametrix outcome disagrees with stable triviality of V");
  }
  return report;
}

/// The standard boundary bundles used by the demos and tests.

/// Rank-1 real line bundle over the circle with half-angle fibres; the
/// classic orientation-reversing example.
inline ProjectionField<double> moebius_bundle(const MeshPtr& circle) {
  ProjectionField<double> field;
  field.base = circle;
  field.ambient_dim = 2;
  field.proj.resize(circle->num_vertices);
  const int m = circle->num_vertices;
  for (int j = 0; j < m; ++j) {
    const double half = M_PI * j / m;  // theta_j / 2
    Eigen::Vector2d u(std::cos(half), std::sin(half));
    field.proj[j] = u * u.transpose();
  }
  return field;
}

/// Rank-1 complex projector field (I + x.sigma)/2 on the unit sphere; the
/// standard curvature-one example.
inline ProjectionField<cxd> bott_bundle(const MeshPtr& sphere) {
  if (sphere->positions.empty()) {
    throw Error(ErrorCode::invalid_spec, "Bott bundle needs vertex positions");
  }
  ProjectionField<cxd> field;
  field.base = sphere;
  field.ambient_dim = 2;
  field.proj.resize(sphere->num_vertices);
  for (int v = 0; v < sphere->num_vertices; ++v) {
    const auto& p = sphere->positions[v];
    Mat<cxd> sigma(2, 2);
    sigma(0, 0) = cxd(p[2], 0.0);
    sigma(0, 1) = cxd(p[0], -p[1]);
    sigma(1, 0) = cxd(p[0], p[1]);
    sigma(1, 1) = cxd(-p[2], 0.0);
    field.proj[v] = (Mat<cxd>::Identity(2, 2) + sigma) / 2.0;
  }
  return field;
}

}  // namespace indexbundle
