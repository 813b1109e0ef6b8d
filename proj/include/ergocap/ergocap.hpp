#pragma once

#include "ergocap/bounds.hpp"
#include "ergocap/config.hpp"
#include "ergocap/csv.hpp"
#include "ergocap/error.hpp"
#include "ergocap/fsmc.hpp"
#include "ergocap/montecarlo.hpp"
#include "ergocap/rng.hpp"
#include "ergocap/sir.hpp"
#include "ergocap/spatial.hpp"
