#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anisomesh {

enum class ErrorKind {
  DegenerateElement,
  InvalidPolygon,
  CutMissesPolygon,
  NonSimpleResult,
  InvalidTopology,
  ParseError,
  TriangulationFailed,
  NoAdmissibleEdge,
  PointOutsideMesh,
  SolveFailed,
  SandwichViolated,
  InvalidConfig,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateElement: return "DegenerateElement";
    case ErrorKind::InvalidPolygon: return "InvalidPolygon";
    case ErrorKind::CutMissesPolygon: return "CutMissesPolygon";
    case ErrorKind::NonSimpleResult: return "NonSimpleResult";
    case ErrorKind::InvalidTopology: return "InvalidTopology";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::TriangulationFailed: return "TriangulationFailed";
    case ErrorKind::NoAdmissibleEdge: return "NoAdmissibleEdge";
    case ErrorKind::PointOutsideMesh: return "PointOutsideMesh";
    case ErrorKind::SolveFailed: return "SolveFailed";
    case ErrorKind::SandwichViolated: return "SandwichViolated";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace anisomesh
