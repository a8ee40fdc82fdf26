#pragma once
// Umbrella header for the whole library.

#include "sfbm/bound_eval.hpp"
#include "sfbm/fbm.hpp"
#include "sfbm/fft.hpp"
#include "sfbm/flow_regularity.hpp"
#include "sfbm/frac_calc.hpp"
#include "sfbm/girsanov.hpp"
#include "sfbm/grid.hpp"
#include "sfbm/kernel_ops.hpp"
#include "sfbm/parallel.hpp"
#include "sfbm/path_batch.hpp"
#include "sfbm/quadrature.hpp"
#include "sfbm/report.hpp"
#include "sfbm/rng.hpp"
#include "sfbm/shuffle_algebra.hpp"
#include "sfbm/skew_sde.hpp"
#include "sfbm/special_functions.hpp"
#include "sfbm/version.hpp"
