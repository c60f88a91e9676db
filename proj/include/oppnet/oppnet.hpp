#pragma once

#include "core.hpp"
#include "engine.hpp"
#include "metrics.hpp"
#include "mobility.hpp"
#include "protocols.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "social.hpp"
#include "trace.hpp"
#include "workload.hpp"
