#pragma once

#include <stdexcept>
#include <string>

namespace edgeswarm {

// Base for every error this library throws. The `code()` string is stable
// and machine-checkable; the message carries context.
class SimError : public std::runtime_error {
 public:
  SimError(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define EDGESWARM_DEFINE_ERROR(NAME)                     \
  class NAME : public SimError {                         \
   public:                                               \
    explicit NAME(const std::string& message)            \
        : SimError(#NAME, message) {}                    \
  }

// sim-engine
EDGESWARM_DEFINE_ERROR(SchedulingInPast);
EDGESWARM_DEFINE_ERROR(UnknownStream);

// network
EDGESWARM_DEFINE_ERROR(MalformedHeader);
EDGESWARM_DEFINE_ERROR(TopologyError);
EDGESWARM_DEFINE_ERROR(NoCoverage);

// registry
EDGESWARM_DEFINE_ERROR(DiscoveryTimeout);
EDGESWARM_DEFINE_ERROR(NoFeasibleBundle);
EDGESWARM_DEFINE_ERROR(NoConnectivity);
EDGESWARM_DEFINE_ERROR(TransferFailed);

// device / lifecycle
EDGESWARM_DEFINE_ERROR(InsufficientMemory);
EDGESWARM_DEFINE_ERROR(UnknownAgent);
EDGESWARM_DEFINE_ERROR(IllegalTransition);
EDGESWARM_DEFINE_ERROR(AgentNotActive);
EDGESWARM_DEFINE_ERROR(CapabilityMismatch);

// scenario / metrics
EDGESWARM_DEFINE_ERROR(ParseError);
EDGESWARM_DEFINE_ERROR(ValidationError);
EDGESWARM_DEFINE_ERROR(MalformedLog);
EDGESWARM_DEFINE_ERROR(MismatchedRuns);

#undef EDGESWARM_DEFINE_ERROR

}  // namespace edgeswarm
