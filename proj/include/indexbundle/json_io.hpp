#pragma once

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "indexbundle/axiom_suite.hpp"
#include "indexbundle/parametrix.hpp"

namespace indexbundle {

using Json = nlohmann::json;

/// Canonical emission: sorted keys (nlohmann objects iterate sorted), floats
/// printed with 17 significant digits, no insignificant whitespace beyond a
/// two-space indent. Reports serialized this way are diffable across runs.
inline void canonical_dump(const Json& node, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
  switch (node.type()) {
    case Json::value_t::object: {
      if (node.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = node.begin(); it != node.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in + Json(it.key()).dump() + ": ";
        canonical_dump(it.value(), out, depth + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (node.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& item : node) {
        if (!first) out += ",\n";
        first = false;
        out += pad_in;
        canonical_dump(item, out, depth + 1);
      }
      out += "\n" + pad + "]";
      return;
    }
    case Json::value_t::number_float: {
      char buffer[64];
      std::snprintf(buffer, sizeof(buffer), "%.17g", node.get<double>());
      out += buffer;
      return;
    }
    default:
      out += node.dump();
      return;
  }
}

inline std::string canonical_dump(const Json& node) {
  std::string out;
  canonical_dump(node, out, 0);
  out += "\n";
  return out;
}

inline Json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(origin, e.what());
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_json_text(buffer.str(), path);
}

inline void write_json_file(const std::string& path, const Json& node) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::parse_error, "cannot write " + path);
  out << canonical_dump(node);
}

namespace schema {

inline const Json& member(const Json& node, const std::string& key,
                          const std::string& path) {
  if (!node.is_object()) throw ParseError(path, "expected an object");
  auto it = node.find(key);
  if (it == node.end()) throw ParseError(path + "/" + key, "missing member");
  return *it;
}

inline int to_int(const Json& node, const std::string& path) {
  if (!node.is_number_integer()) throw ParseError(path, "expected an integer");
  return node.get<int>();
}

inline double to_double(const Json& node, const std::string& path) {
  if (!node.is_number()) throw ParseError(path, "expected a number");
  return node.get<double>();
}

inline std::string to_string_checked(const Json& node, const std::string& path) {
  if (!node.is_string()) throw ParseError(path, "expected a string");
  return node.get<std::string>();
}

}  // namespace schema

// ---------------------------------------------------------------------------
// mesh

inline Json mesh_to_json(const BaseMesh& mesh) {
  Json j;
  j["kind"] = to_string(mesh.kind);
  j["vertices"] = mesh.num_vertices;
  j["edges"] = Json::array();
  for (const auto& e : mesh.edges) j["edges"].push_back({e[0], e[1]});
  j["faces"] = mesh.faces;
  j["loops"] = mesh.loops;
  if (mesh.kind == MeshKind::product && mesh.slice_base) {
    j["slices"] = {{"t_steps", mesh.t_steps},
                   {"base", mesh_to_json(*mesh.slice_base)}};
  }
  if (!mesh.positions.empty()) {
    Json positions = Json::array();
    for (const auto& p : mesh.positions) positions.push_back({p[0], p[1], p[2]});
    j["positions"] = positions;
  }
  return j;
}

inline BaseMesh mesh_from_json(const Json& j, const std::string& path) {
  BaseMesh mesh;
  mesh.kind = mesh_kind_from_string(
      schema::to_string_checked(schema::member(j, "kind", path), path + "/kind"));
  mesh.num_vertices =
      schema::to_int(schema::member(j, "vertices", path), path + "/vertices");
  const Json& edges = schema::member(j, "edges", path);
  if (!edges.is_array()) throw ParseError(path + "/edges", "expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string epath = path + "/edges/" + std::to_string(i);
    if (!edges[i].is_array() || edges[i].size() != 2) {
      throw ParseError(epath, "expected a vertex pair");
    }
    int a = schema::to_int(edges[i][0], epath);
    int b = schema::to_int(edges[i][1], epath);
    if (a > b) std::swap(a, b);
    mesh.edges.push_back({a, b});
  }
  mesh.sort_edges();
  auto read_cycles = [&](const char* key, std::vector<std::vector<int>>& out) {
    const Json& cycles = schema::member(j, key, path);
    if (!cycles.is_array()) {
      throw ParseError(path + "/" + key, "expected an array");
    }
    for (std::size_t i = 0; i < cycles.size(); ++i) {
      const std::string cpath = path + "/" + key + "/" + std::to_string(i);
      if (!cycles[i].is_array()) throw ParseError(cpath, "expected an array");
      std::vector<int> cycle;
      for (std::size_t k = 0; k < cycles[i].size(); ++k) {
        cycle.push_back(schema::to_int(cycles[i][k], cpath));
      }
      out.push_back(std::move(cycle));
    }
  };
  read_cycles("faces", mesh.faces);
  read_cycles("loops", mesh.loops);
  if (j.contains("slices")) {
    const Json& slices = j["slices"];
    mesh.t_steps = schema::to_int(schema::member(slices, "t_steps", path + "/slices"),
                                  path + "/slices/t_steps");
    mesh.slice_base = share(mesh_from_json(
        schema::member(slices, "base", path + "/slices"), path + "/slices/base"));
  }
  if (j.contains("positions")) {
    const Json& positions = j["positions"];
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const std::string ppath = path + "/positions/" + std::to_string(i);
      if (!positions[i].is_array() || positions[i].size() != 3) {
        throw ParseError(ppath, "expected [x,y,z]");
      }
      mesh.positions.push_back({schema::to_double(positions[i][0], ppath),
                                schema::to_double(positions[i][1], ppath),
                                schema::to_double(positions[i][2], ppath)});
    }
  }
  try {
    mesh.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  return mesh;
}

// ---------------------------------------------------------------------------
// bundle

namespace detail {

template <class Scalar>
inline Json entry_to_json(const Scalar& value) {
  if constexpr (is_complex_v<Scalar>) {
    return Json::array({value.real(), value.imag()});
  } else {
    return Json(value);
  }
}

template <class Scalar>
inline Scalar entry_from_json(const Json& node, const std::string& path) {
  if constexpr (is_complex_v<Scalar>) {
    if (!node.is_array() || node.size() != 2) {
      throw ParseError(path, "expected [re, im]");
    }
    return Scalar(schema::to_double(node[0], path), schema::to_double(node[1], path));
  } else {
    return schema::to_double(node, path);
  }
}

template <class Scalar>
inline Json matrix_to_json(const Mat<Scalar>& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(entry_to_json(m(r, c)));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

template <class Scalar>
inline Mat<Scalar> matrix_from_json(const Json& node, int rows, int cols,
                                    const std::string& path) {
  if (!node.is_array() || static_cast<int>(node.size()) != rows) {
    throw ParseError(path, "expected " + std::to_string(rows) + " rows");
  }
  Mat<Scalar> m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const std::string rpath = path + "/" + std::to_string(r);
    if (!node[r].is_array() || static_cast<int>(node[r].size()) != cols) {
      throw ParseError(rpath, "expected " + std::to_string(cols) + " columns");
    }
    for (int c = 0; c < cols; ++c) {
      m(r, c) = entry_from_json<Scalar>(node[r][c], rpath + "/" + std::to_string(c));
    }
  }
  return m;
}

}  // namespace detail

template <class Scalar>
inline Json bundle_to_json(const ProjectionField<Scalar>& field) {
  Json j;
  j["ambient_dim"] = field.ambient_dim;
  j["scalar"] = to_string(ProjectionField<Scalar>::scalar);
  Json proj = Json::array();
  for (const auto& p : field.proj) proj.push_back(detail::matrix_to_json(p));
  j["proj"] = std::move(proj);
  return j;
}

using AnyBundle = std::variant<ProjectionField<double>, ProjectionField<cxd>>;

template <class Scalar>
inline ProjectionField<Scalar> bundle_from_json_typed(const Json& j, const MeshPtr& mesh,
                                                      const std::string& path) {
  ProjectionField<Scalar> field;
  field.base = mesh;
  field.ambient_dim = schema::to_int(schema::member(j, "ambient_dim", path),
                                     path + "/ambient_dim");
  const Json& proj = schema::member(j, "proj", path);
  if (!proj.is_array() || static_cast<int>(proj.size()) != mesh->num_vertices) {
    throw ParseError(path + "/proj", "expected one projector per vertex");
  }
  for (int v = 0; v < mesh->num_vertices; ++v) {
    field.proj.push_back(detail::matrix_from_json<Scalar>(
        proj[v], field.ambient_dim, field.ambient_dim,
        path + "/proj/" + std::to_string(v)));
  }
  return field;
}

inline AnyBundle bundle_from_json(const Json& j, const MeshPtr& mesh,
                                  const std::string& path) {
  const std::string scalar = schema::to_string_checked(
      schema::member(j, "scalar", path), path + "/scalar");
  if (scalar == "real") return bundle_from_json_typed<double>(j, mesh, path);
  if (scalar == "complex") return bundle_from_json_typed<cxd>(j, mesh, path);
  throw ParseError(path + "/scalar", "expected 'real' or 'complex'");
}

// ---------------------------------------------------------------------------
// morphism

template <class Scalar>
inline Json morphism_to_json(const MorphismField<Scalar>& morphism,
                             const BaseMesh& mesh) {
  Json j;
  j["mesh"] = mesh_to_json(mesh);
  j["domain"] = bundle_to_json(morphism.domain);
  j["target"] = bundle_to_json(morphism.target);
  Json mats = Json::array();
  for (const auto& m : morphism.mats) mats.push_back(detail::matrix_to_json(m));
  j["mats"] = std::move(mats);
  return j;
}

using AnyMorphism = std::variant<MorphismField<double>, MorphismField<cxd>>;

/// Resolves a member that may be an inline object or a path string relative
/// to `base_dir`.
inline Json resolve_ref(const Json& node, const std::string& base_dir,
                        const std::string& path) {
  if (node.is_object()) return node;
  if (node.is_string()) {
    const std::filesystem::path ref(node.get<std::string>());
    const auto full = ref.is_absolute()
                          ? ref
                          : std::filesystem::path(base_dir) / ref;
    return load_json_file(full.string());
  }
  throw ParseError(path, "expected an inline object or a path string");
}

template <class Scalar>
inline MorphismField<Scalar> morphism_from_json_typed(const Json& j, const MeshPtr& mesh,
                                                      const std::string& base_dir,
                                                      const std::string& path,
                                                      const ToleranceConfig& cfg) {
  const Json domain_json =
      resolve_ref(schema::member(j, "domain", path), base_dir, path + "/domain");
  const Json target_json =
      resolve_ref(schema::member(j, "target", path), base_dir, path + "/target");
  auto domain = bundle_from_json_typed<Scalar>(domain_json, mesh, path + "/domain");
  auto target = bundle_from_json_typed<Scalar>(target_json, mesh, path + "/target");
  const Json& mats = schema::member(j, "mats", path);
  if (!mats.is_array() || static_cast<int>(mats.size()) != mesh->num_vertices) {
    throw ParseError(path + "/mats", "expected one matrix per vertex");
  }
  std::vector<Mat<Scalar>> matrices;
  for (int v = 0; v < mesh->num_vertices; ++v) {
    matrices.push_back(detail::matrix_from_json<Scalar>(
        mats[v], target.ambient_dim, domain.ambient_dim,
        path + "/mats/" + std::to_string(v)));
  }
  return make_morphism(domain, target, std::move(matrices), cfg);
}

inline AnyMorphism morphism_from_json(const Json& j, const std::string& base_dir,
                                      const std::string& path,
                                      const ToleranceConfig& cfg) {
  const Json mesh_json =
      resolve_ref(schema::member(j, "mesh", path), base_dir, path + "/mesh");
  const MeshPtr mesh = share(mesh_from_json(mesh_json, path + "/mesh"));
  const Json domain_json =
      resolve_ref(schema::member(j, "domain", path), base_dir, path + "/domain");
  const std::string scalar = schema::to_string_checked(
      schema::member(domain_json, "scalar", path + "/domain"),
      path + "/domain/scalar");
  if (scalar == "real") {
    return morphism_from_json_typed<double>(j, mesh, base_dir, path, cfg);
  }
  if (scalar == "complex") {
    return morphism_from_json_typed<cxd>(j, mesh, base_dir, path, cfg);
  }
  throw ParseError(path + "/domain/scalar", "expected 'real' or 'complex'");
}

inline AnyMorphism load_morphism_file(const std::string& file,
                                      const ToleranceConfig& cfg) {
  const Json j = load_json_file(file);
  const std::string dir = std::filesystem::path(file).parent_path().string();
  return morphism_from_json(j, dir.empty() ? "." : dir, file, cfg);
}

// ---------------------------------------------------------------------------
// mesh maps

inline Json mesh_map_to_json(const MeshMap& map) {
  Json j;
  j["source"] = mesh_to_json(*map.source);
  j["target"] = mesh_to_json(*map.target);
  j["vertex_assignment"] = map.vertex_assignment;
  return j;
}

inline MeshMap mesh_map_from_json(const Json& j, const std::string& base_dir,
                                  const std::string& path) {
  MeshMap map;
  map.source = share(mesh_from_json(
      resolve_ref(schema::member(j, "source", path), base_dir, path + "/source"),
      path + "/source"));
  map.target = share(mesh_from_json(
      resolve_ref(schema::member(j, "target", path), base_dir, path + "/target"),
      path + "/target"));
  const Json& assignment = schema::member(j, "vertex_assignment", path);
  if (!assignment.is_array()) {
    throw ParseError(path + "/vertex_assignment", "expected an array");
  }
  for (const auto& entry : assignment) {
    map.vertex_assignment.push_back(
        schema::to_int(entry, path + "/vertex_assignment"));
  }
  try {
    map.validate();
  } catch (const Error& e) {
    throw ParseError(path, e.what());
  }
  return map;
}

// ---------------------------------------------------------------------------
// records and reports

inline Json record_to_json(const InvariantRecord& record) {
  Json j;
  j["rank"] = record.rank;
  j["w1"] = record.w1;
  j["c1"] = record.c1;
  return j;
}

inline InvariantRecord record_from_json(const Json& j, const std::string& path) {
  InvariantRecord record;
  record.rank = schema::to_int(schema::member(j, "rank", path), path + "/rank");
  for (const auto& bit : schema::member(j, "w1", path)) {
    record.w1.push_back(schema::to_int(bit, path + "/w1"));
  }
  for (const auto& c : schema::member(j, "c1", path)) {
    record.c1.push_back(schema::to_int(c, path + "/c1"));
  }
  return record;
}

template <class Scalar>
inline Json class_to_json(const VirtualBundle<Scalar>& virtual_bundle, int dim_v,
                          double margin) {
  Json j = record_to_json(virtual_bundle.reduced);
  j["dimV"] = dim_v;
  j["margin"] = margin;
  return j;
}

inline Json config_to_json(const ToleranceConfig& cfg) {
  Json j;
  j["rank_scale"] = cfg.rank_scale;
  j["tau_idem"] = cfg.tau_idem;
  j["delta_edge"] = cfg.delta_edge;
  j["seed"] = cfg.seed;
  j["tau_trans_scale"] = cfg.tau_trans_scale;
  j["sigma_floor"] = cfg.sigma_floor;
  j["frame_slack"] = cfg.frame_slack;
  j["threads"] = cfg.threads;
  return j;
}

inline Json run_report_to_json(const RunReport& report, const ToleranceConfig& cfg) {
  Json j;
  j["command"] = report.command;
  j["seed"] = report.seed;
  j["trials"] = report.trials;
  j["config"] = config_to_json(cfg);
  j["pass"] = report.pass();
  Json checks = Json::array();
  for (const auto& c : report.checks) {
    Json check;
    check["name"] = c.name;
    check["trials"] = c.trials;
    check["failures"] = c.failures;
    check["detail"] = c.detail;
    check["pass"] = c.pass();
    checks.push_back(std::move(check));
  }
  j["checks"] = std::move(checks);
  j["wall_ms"] = report.wall_ms;
  return j;
}

inline Json validation_to_json(const BundleValidation& report) {
  Json j;
  j["pass"] = report.pass;
  j["max_idem_residual"] = report.max_idem_residual;
  j["max_herm_residual"] = report.max_herm_residual;
  j["max_edge_gap"] = report.max_edge_gap;
  j["component_rank"] = report.component_rank;
  j["failures"] = report.failures;
  return j;
}

inline Json welldef_to_json(const WellDefinednessReport& report) {
  Json j;
  j["first"] = record_to_json(report.first);
  j["second"] = record_to_json(report.second);
  j["dim_first"] = report.dim_first;
  j["dim_second"] = report.dim_second;
  j["equal"] = report.equal;
  return j;
}

template <class Scalar>
inline Json bvp_report_to_json(const BvpReport<Scalar>& report) {
  Json j;
  j["computed"] = record_to_json(report.computed);
  j["expected"] = record_to_json(report.expected);
  j["classes_equal"] = report.classes_equal;
  j["stabilizable"] = report.stabilizable;
  j["min_sv"] = report.min_sv;
  j["certificate"] = report.certificate;
  return j;
}

template <class Scalar>
inline Json parametrix_to_json(const ParametrixResult<Scalar>& result) {
  Json j;
  j["status"] = result.status == ParametrixStatus::built ? "built" : "obstructed";
  j["min_sv"] = result.min_sv;
  j["dimV"] = result.dim_v;
  if (result.obstruction) {
    j["obstruction"] = record_to_json(*result.obstruction);
    j["certificate"] = result.certificate;
  } else {
    j["obstruction"] = nullptr;
  }
  return j;
}

}  // namespace indexbundle
