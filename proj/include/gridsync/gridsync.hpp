#pragma once

#include "gridsync/grid_model.hpp"
#include "gridsync/matrix.hpp"
#include "gridsync/planners.hpp"
#include "gridsync/rng.hpp"
#include "gridsync/spectral.hpp"
#include "gridsync/swing_sim.hpp"
#include "gridsync/version.hpp"
