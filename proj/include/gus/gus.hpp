/**
 * @file gus.hpp
 * @brief Umbrella header.
 */
#pragma once

#include "gus/common.hpp"
#include "gus/gscm.hpp"
#include "gus/harness.hpp"
#include "gus/localization.hpp"
#include "gus/rx_rate.hpp"
#include "gus/scenario_io.hpp"
#include "gus/scheduler.hpp"
