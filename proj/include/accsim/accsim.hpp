#pragma once

// Umbrella header: the whole library.

#include "analysis.hpp"
#include "app.hpp"
#include "controller.hpp"
#include "errors.hpp"
#include "estimator.hpp"
#include "integrate.hpp"
#include "matops.hpp"
#include "plant.hpp"
#include "scenario.hpp"
#include "sim.hpp"
#include "trace_io.hpp"
