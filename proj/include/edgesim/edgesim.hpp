#pragma once

#include "edgesim/default_profiles.hpp"
#include "edgesim/device_model.hpp"
#include "edgesim/discovery.hpp"
#include "edgesim/error.hpp"
#include "edgesim/health.hpp"
#include "edgesim/net_model.hpp"
#include "edgesim/orchestrator.hpp"
#include "edgesim/profiler.hpp"
#include "edgesim/report.hpp"
#include "edgesim/rng.hpp"
#include "edgesim/scenario.hpp"
#include "edgesim/sim_engine.hpp"
