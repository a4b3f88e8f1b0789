#pragma once

#include <stdexcept>
#include <string>

namespace indexbundle {

/// Failure categories used across the library. Input/contract violations and
/// mathematical check failures map to distinct CLI exit codes (2 and 1).
enum class ErrorCode {
  invalid_mesh,
  shape_mismatch,
  degenerate_span,
  not_a_subbundle,
  rank_slack,
  extension_failure,
  not_a_bundle,
  invalid_morphism,
  image_escape,
  ambient_exhausted,
  transversality_degraded,
  well_definedness_violation,
  e1_search_failure,
  undecidable_base,
  mesh_too_coarse,
  transport_undefined,
  discretization_mismatch,
  invalid_spec,
  parse_error,
  invalid_config,
  internal_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_mesh: return "invalid-mesh";
    case ErrorCode::shape_mismatch: return "shape-mismatch";
    case ErrorCode::degenerate_span: return "degenerate-span";
    case ErrorCode::not_a_subbundle: return "not-a-subbundle";
    case ErrorCode::rank_slack: return "rank-slack";
    case ErrorCode::extension_failure: return "extension-failure";
    case ErrorCode::not_a_bundle: return "not-a-bundle";
    case ErrorCode::invalid_morphism: return "invalid-morphism";
    case ErrorCode::image_escape: return "image-escape";
    case ErrorCode::ambient_exhausted: return "ambient-exhausted";
    case ErrorCode::transversality_degraded: return "transversality-degraded";
    case ErrorCode::well_definedness_violation: return "well-definedness-violation";
    case ErrorCode::e1_search_failure: return "e1-search-failure";
    case ErrorCode::undecidable_base: return "undecidable-base";
    case ErrorCode::mesh_too_coarse: return "mesh-too-coarse";
    case ErrorCode::transport_undefined: return "transport-undefined";
    case ErrorCode::discretization_mismatch: return "discretization-mismatch";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::internal_error: return "internal-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// True for errors caused by bad inputs or violated preconditions, as opposed
/// to a mathematical check coming out false. Drives the CLI exit-code contract.
inline bool is_input_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_mesh:
    case ErrorCode::shape_mismatch:
    case ErrorCode::degenerate_span:
    case ErrorCode::not_a_subbundle:
    case ErrorCode::rank_slack:
    case ErrorCode::not_a_bundle:
    case ErrorCode::invalid_morphism:
    case ErrorCode::image_escape:
    case ErrorCode::ambient_exhausted:
    case ErrorCode::undecidable_base:
    case ErrorCode::mesh_too_coarse:
    case ErrorCode::transport_undefined:
    case ErrorCode::invalid_spec:
    case ErrorCode::parse_error:
    case ErrorCode::invalid_config:
      return true;
    default:
      return false;
  }
}

/// Schema violations carry the JSON-pointer-style path of the offending node.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, const std::string& message)
      : Error(ErrorCode::parse_error, "at '" + path + "': " + message),
        path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace indexbundle
