#pragma once

#include <array>
#include <optional>
#include <string>

namespace edgeswarm {

enum class LifecycleState { Requested, Deploying, Dormant, Active, Paused, Expired, Uninstalled };

enum class LifecycleEvent {
  StartDeploy,
  InstallComplete,
  TransferFailed,
  Activate,
  Pause,
  Resume,
  Expire,
  Uninstall,
};

inline std::string to_string(LifecycleState s) {
  switch (s) {
    case LifecycleState::Requested: return "Requested";
    case LifecycleState::Deploying: return "Deploying";
    case LifecycleState::Dormant: return "Dormant";
    case LifecycleState::Active: return "Active";
    case LifecycleState::Paused: return "Paused";
    case LifecycleState::Expired: return "Expired";
    case LifecycleState::Uninstalled: return "Uninstalled";
  }
  return "?";
}

inline std::string to_string(LifecycleEvent e) {
  switch (e) {
    case LifecycleEvent::StartDeploy: return "start-deploy";
    case LifecycleEvent::InstallComplete: return "install-complete";
    case LifecycleEvent::TransferFailed: return "transfer-failed";
    case LifecycleEvent::Activate: return "activate";
    case LifecycleEvent::Pause: return "pause";
    case LifecycleEvent::Resume: return "resume";
    case LifecycleEvent::Expire: return "expire";
    case LifecycleEvent::Uninstall: return "uninstall";
  }
  return "?";
}

inline constexpr std::array<LifecycleState, 7> kAllLifecycleStates = {
    LifecycleState::Requested, LifecycleState::Deploying, LifecycleState::Dormant,
    LifecycleState::Active,    LifecycleState::Paused,    LifecycleState::Expired,
    LifecycleState::Uninstalled};

inline constexpr std::array<LifecycleEvent, 8> kAllLifecycleEvents = {
    LifecycleEvent::StartDeploy, LifecycleEvent::InstallComplete,
    LifecycleEvent::TransferFailed, LifecycleEvent::Activate,
    LifecycleEvent::Pause, LifecycleEvent::Resume,
    LifecycleEvent::Expire, LifecycleEvent::Uninstall};

// The complete transition table. Any (state, event) pair not listed here is
// illegal; Uninstalled is terminal.
inline std::optional<LifecycleState> lifecycle_next(LifecycleState s, LifecycleEvent e) {
  using S = LifecycleState;
  using E = LifecycleEvent;
  switch (s) {
    case S::Requested:
      if (e == E::StartDeploy) return S::Deploying;
      break;
    case S::Deploying:
      if (e == E::InstallComplete) return S::Dormant;
      if (e == E::TransferFailed) return S::Uninstalled;
      break;
    case S::Dormant:
      if (e == E::Activate) return S::Active;
      if (e == E::Expire) return S::Expired;
      break;
    case S::Active:
      if (e == E::Pause) return S::Paused;
      if (e == E::Expire) return S::Expired;
      break;
    case S::Paused:
      if (e == E::Resume) return S::Active;
      if (e == E::Expire) return S::Expired;
      break;
    case S::Expired:
      if (e == E::Uninstall) return S::Uninstalled;
      break;
    case S::Uninstalled:
      break;
  }
  return std::nullopt;
}

}  // namespace edgeswarm
