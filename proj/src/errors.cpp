#include "mcsle/errors.hpp"

namespace mcsle {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MeshTooCoarse: return "MeshTooCoarse";
    case ErrorKind::MarksCoincide: return "MarksCoincide";
    case ErrorKind::DisconnectsDomain: return "DisconnectsDomain";
    case ErrorKind::TouchesMarks: return "TouchesMarks";
    case ErrorKind::NotACrosscut: return "NotACrosscut";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::ContractionViolated: return "ContractionViolated";
    case ErrorKind::CrosscutsIntersect: return "CrosscutsIntersect";
    case ErrorKind::OverlappingTargets: return "OverlappingTargets";
    case ErrorKind::OperatorNotContraction: return "OperatorNotContraction";
    case ErrorKind::RejectionBudgetExhausted: return "RejectionBudgetExhausted";
    case ErrorKind::ObstacleTouchesMinusArcs: return "ObstacleTouchesMinusArcs";
    case ErrorKind::IncompatibleReference: return "IncompatibleReference";
    case ErrorKind::FillSwallowsTarget: return "FillSwallowsTarget";
    case ErrorKind::TraceStuck: return "TraceStuck";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::TooFewRestrictedSamples: return "TooFewRestrictedSamples";
    case ErrorKind::NonPositiveModulus: return "NonPositiveModulus";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace mcsle
