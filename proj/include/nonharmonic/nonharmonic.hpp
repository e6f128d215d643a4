#pragma once

#include "nonharmonic/analysis.hpp"
#include "nonharmonic/calculus.hpp"
#include "nonharmonic/error.hpp"
#include "nonharmonic/evolve.hpp"
#include "nonharmonic/model.hpp"
#include "nonharmonic/parallel.hpp"
#include "nonharmonic/quadrature.hpp"
#include "nonharmonic/quantize.hpp"
#include "nonharmonic/symbols.hpp"
#include "nonharmonic/transform.hpp"
#include "nonharmonic/types.hpp"
