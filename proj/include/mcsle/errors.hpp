#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcsle {

enum class ErrorKind {
  MeshTooCoarse,
  MarksCoincide,
  DisconnectsDomain,
  TouchesMarks,
  NotACrosscut,
  SingularSystem,
  ContractionViolated,
  CrosscutsIntersect,
  OverlappingTargets,
  OperatorNotContraction,
  RejectionBudgetExhausted,
  ObstacleTouchesMinusArcs,
  IncompatibleReference,
  FillSwallowsTarget,
  TraceStuck,
  DegenerateSample,
  TooFewRestrictedSamples,
  NonPositiveModulus,
  InvalidArgument,
  InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(message), kind_(kind), field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Name of the offending input field, when the error comes from validation.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace mcsle
