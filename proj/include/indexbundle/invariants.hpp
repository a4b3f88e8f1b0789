#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "indexbundle/transport.hpp"

namespace indexbundle {

/// Reduced K-theory data of a (virtual) bundle on a supported base: the rank,
/// one orientability bit per loop generator (real scalars) and one curvature
/// integer per closed oriented surface (complex scalars).
struct InvariantRecord {
  int rank = 0;
  std::vector<int> w1;  // bit per loop generator
  std::vector<int> c1;  // integer per closed surface

  bool operator==(const InvariantRecord&) const = default;

  bool is_zero() const {
    if (rank != 0) return false;
    for (int b : w1) {
      if (b != 0) return false;
    }
    for (int c : c1) {
      if (c != 0) return false;
    }
    return true;
  }

  std::string to_string() const {
    std::ostringstream os;
    os << "rank=" << rank;
    if (!w1.empty()) {
      os << " w1=[";
      for (std::size_t i = 0; i < w1.size(); ++i) os << (i ? "," : "") << w1[i];
      os << "]";
    }
    if (!c1.empty()) {
      os << " c1=[";
      for (std::size_t i = 0; i < c1.size(); ++i) os << (i ? "," : "") << c1[i];
      os << "]";
    }
    return os.str();
  }
};

/// Rank of a projection field; the base must be connected so a single integer
/// is honest.
template <class Scalar>
inline int rank_of(const ProjectionField<Scalar>& field, const ToleranceConfig& cfg) {
  if (!field.base->is_connected()) {
    throw Error(ErrorCode::undecidable_base,
                "rank reduction needs a connected base mesh");
  }
  return field.proj.empty() ? 0 : field.rank_at(0, cfg);
}

/// Orientability bit of a real bundle along one closed walk: transport an
/// orthonormal fibre frame around the loop by orthogonal Procrustes alignment
/// and take the determinant sign of the return map. 0 means +1, 1 means -1.
template <class Scalar>
inline int w1_loop(const ProjectionField<Scalar>& field, const std::vector<int>& walk,
                   const ToleranceConfig& cfg) {
  static_assert(!is_complex_v<Scalar>, "w1 is defined for real scalars only");
  for (std::size_t i = 0; i < walk.size(); ++i) {
    const int a = walk[i];
    const int b = walk[(i + 1) % walk.size()];
    const double gap = spectral_norm<Scalar>(field.proj[a] - field.proj[b]);
    if (gap >= 1.0 - cfg.delta_edge) {
      throw Error(ErrorCode::transport_undefined,
                  "edge gap " + std::to_string(gap) + " on walk step (" +
                      std::to_string(a) + "," + std::to_string(b) +
                      ") leaves fibres incomparable");
    }
  }
  const auto frames = vertex_frames(field, cfg);
  const Scalar det = loop_overlap_determinant<Scalar>(frames, walk, cfg);
  return det < Scalar(0) ? 1 : 0;
}

/// Total curvature integer of a complex bundle over the closed oriented
/// surface carried by the mesh faces: per face, the phase of the determinant
/// of the cycle of overlap maps between successive fibre frames; the face sum
/// divided by 2*pi must land on an integer.
///
/// Sign convention: faces are traversed in their stored orientation (outward
/// for generated spheres); the rank-1 field (I + x.sigma)/2 then reduces to
/// c1 = +1.
template <class Scalar>
inline int c1_surface(const ProjectionField<Scalar>& field,
                      const std::vector<std::vector<int>>& faces,
                      const ToleranceConfig& cfg) {
  static_assert(is_complex_v<Scalar>, "c1 is defined for complex scalars only");
  if (faces.empty()) {
    throw Error(ErrorCode::undecidable_base, "c1 needs a closed oriented face set");
  }
  const auto frames = vertex_frames(field, cfg);
  double total = 0.0;
  for (const auto& face : faces) {
    const Scalar det = loop_overlap_determinant<Scalar>(frames, face, cfg);
    total += std::arg(det);
  }
  const double value = total / (2.0 * M_PI);
  const double nearest = std::round(value);
  if (std::abs(value - nearest) > 1e-6) {
    throw Error(ErrorCode::mesh_too_coarse,
                "face curvature total " + std::to_string(value) +
                    " is not an integer; refine the mesh");
  }
  return static_cast<int>(nearest);
}

/// True when the record can decide stable triviality on this base: circles,
/// intervals, products of those, and (complex scalars only) spheres. Real
/// bundles over spheres carry 2-torsion the record cannot see, so they are
/// refused.
inline void require_decidable_base(const BaseMesh& mesh, ScalarKind scalar) {
  const BaseMesh* effective = &mesh;
  if (mesh.kind == MeshKind::product && mesh.slice_base) {
    effective = mesh.slice_base.get();
  }
  switch (effective->kind) {
    case MeshKind::circle:
    case MeshKind::interval:
      return;
    case MeshKind::sphere:
      if (scalar == ScalarKind::complex) return;
      throw Error(ErrorCode::undecidable_base,
                  "real K-invariants over a sphere are not decided by this record");
    default:
      throw Error(ErrorCode::undecidable_base,
                  std::string("base kind '") + to_string(effective->kind) +
                      "' is outside the decidable fragment");
  }
}

/// Full reduced record of a single projection field.
template <class Scalar>
inline InvariantRecord reduce_field(const ProjectionField<Scalar>& field,
                                    const ToleranceConfig& cfg) {
  InvariantRecord record;
  record.rank = rank_of(field, cfg);
  const BaseMesh& mesh = *field.base;
  if constexpr (!is_complex_v<Scalar>) {
    for (const auto& walk : mesh.loops) {
      record.w1.push_back(w1_loop(field, walk, cfg));
    }
  } else {
    if (!mesh.faces.empty()) record.c1.push_back(c1_surface(field, mesh.faces, cfg));
  }
  return record;
}

/// Reduced record of a formal difference plus - minus.
template <class Scalar>
inline InvariantRecord reduce_virtual(const ProjectionField<Scalar>& plus,
                                      const ProjectionField<Scalar>& minus,
                                      const ToleranceConfig& cfg) {
  const InvariantRecord a = reduce_field(plus, cfg);
  const InvariantRecord b = reduce_field(minus, cfg);
  InvariantRecord record;
  record.rank = a.rank - b.rank;
  record.w1.resize(a.w1.size());
  for (std::size_t i = 0; i < a.w1.size(); ++i) record.w1[i] = a.w1[i] ^ b.w1[i];
  record.c1.resize(a.c1.size());
  for (std::size_t i = 0; i < a.c1.size(); ++i) record.c1[i] = a.c1[i] - b.c1[i];
  return record;
}

struct TrivialityDecision {
  bool stably_trivial = false;
  std::string certificate;  // names the violated invariant when false
};

inline TrivialityDecision decide_stably_trivial(const InvariantRecord& record) {
  TrivialityDecision decision;
  if (record.rank != 0) {
    decision.certificate = "rank = " + std::to_string(record.rank);
    return decision;
  }
  for (std::size_t i = 0; i < record.w1.size(); ++i) {
    if (record.w1[i] != 0) {
      decision.certificate = "w1[" + std::to_string(i) + "] = 1";
      return decision;
    }
  }
  for (std::size_t i = 0; i < record.c1.size(); ++i) {
    if (record.c1[i] != 0) {
      decision.certificate =
          "c1[" + std::to_string(i) + "] = " + std::to_string(record.c1[i]);
      return decision;
    }
  }
  decision.stably_trivial = true;
  return decision;
}

}  // namespace indexbundle
