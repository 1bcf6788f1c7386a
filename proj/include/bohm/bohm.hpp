#pragma once

#include "bohm/analysis.hpp"
#include "bohm/core_model.hpp"
#include "bohm/detection.hpp"
#include "bohm/errors.hpp"
#include "bohm/field_engine.hpp"
#include "bohm/numerics.hpp"
#include "bohm/rng.hpp"
#include "bohm/sampling.hpp"
#include "bohm/superposition.hpp"
#include "bohm/trajectory_engine.hpp"
