#pragma once

#include "fracspread/cascade.hpp"
#include "fracspread/errors.hpp"
#include "fracspread/experiment.hpp"
#include "fracspread/graph.hpp"
#include "fracspread/optimize.hpp"
#include "fracspread/reductions.hpp"
#include "fracspread/rng.hpp"
