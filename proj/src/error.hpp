// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tsc {

enum class ErrorCode {
  MalformedDocument,
  InvalidTopology,
  DanglingReference,
  UnsupportedGeometry,
  UnknownIntersection,
  InvalidPlan,
  PhaseNotAtIntersection,
  NotActionBoundary,
  UnknownEntity,
  EpisodeFinished,
  InvalidAction,
  ShapeMismatch,
  EmptyGroup,
  MissingGradient,
  BufferNotFull,
  InvalidCycle,
  InvalidConfig,
  CheckpointVersionMismatch,
  Io,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace tsc
