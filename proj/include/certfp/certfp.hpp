#pragma once

// Certified fixed-point solving: contraction data is checked, not assumed,
// and every answer ships with a machine-checkable error bound.

#include "certfp/engine.hpp"
#include "certfp/expression.hpp"
#include "certfp/gauge.hpp"
#include "certfp/grid_function.hpp"
#include "certfp/operators.hpp"
#include "certfp/problem.hpp"
#include "certfp/random.hpp"
#include "certfp/report.hpp"
#include "certfp/stability.hpp"
