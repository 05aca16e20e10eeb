#pragma once

#include "quenchmap/core.hpp"
#include "quenchmap/errors.hpp"
#include "quenchmap/fft.hpp"
#include "quenchmap/maps.hpp"
#include "quenchmap/parallel.hpp"
#include "quenchmap/propagators.hpp"
#include "quenchmap/runner.hpp"
#include "quenchmap/scenario.hpp"
#include "quenchmap/states.hpp"
#include "quenchmap/verify.hpp"
