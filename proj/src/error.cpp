// SPDX-License-Identifier: Apache-2.0
#include "error.hpp"

namespace tsc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedDocument: return "MalformedDocument";
    case ErrorCode::InvalidTopology: return "InvalidTopology";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnsupportedGeometry: return "UnsupportedGeometry";
    case ErrorCode::UnknownIntersection: return "UnknownIntersection";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::PhaseNotAtIntersection: return "PhaseNotAtIntersection";
    case ErrorCode::NotActionBoundary: return "NotActionBoundary";
    case ErrorCode::UnknownEntity: return "UnknownEntity";
    case ErrorCode::EpisodeFinished: return "EpisodeFinished";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::MissingGradient: return "MissingGradient";
    case ErrorCode::BufferNotFull: return "BufferNotFull";
    case ErrorCode::InvalidCycle: return "InvalidCycle";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::CheckpointVersionMismatch: return "CheckpointVersionMismatch";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace tsc
