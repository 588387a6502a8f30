#pragma once

#include "curvedirac/curvature_map.hpp"
#include "curvedirac/dual.hpp"
#include "curvedirac/error.hpp"
#include "curvedirac/expr.hpp"
#include "curvedirac/fd_oracle.hpp"
#include "curvedirac/fft.hpp"
#include "curvedirac/field.hpp"
#include "curvedirac/flat_dirac.hpp"
#include "curvedirac/metric.hpp"
#include "curvedirac/quadrature.hpp"
