#pragma once

// Umbrella header.

#include "winomem/drivers.hpp"
#include "winomem/executor.hpp"
#include "winomem/meter.hpp"
#include "winomem/models.hpp"
#include "winomem/pebble.hpp"
#include "winomem/ring.hpp"
#include "winomem/schedule.hpp"
#include "winomem/validate.hpp"
#include "winomem/workspace.hpp"
