#pragma once

// Umbrella header: the whole simulator.

#include "edgeswarm/agent_state.hpp"
#include "edgeswarm/agents.hpp"
#include "edgeswarm/device.hpp"
#include "edgeswarm/engine.hpp"
#include "edgeswarm/errors.hpp"
#include "edgeswarm/event_log.hpp"
#include "edgeswarm/geometry.hpp"
#include "edgeswarm/lifecycle.hpp"
#include "edgeswarm/metrics.hpp"
#include "edgeswarm/network.hpp"
#include "edgeswarm/registry.hpp"
#include "edgeswarm/rng.hpp"
#include "edgeswarm/runner.hpp"
#include "edgeswarm/scenario.hpp"
#include "edgeswarm/time.hpp"
