#pragma once

#include "confband/error.hpp"
#include "confband/grid.hpp"
#include "confband/quantile.hpp"
#include "confband/rng.hpp"
#include "confband/modulation.hpp"
#include "confband/conformal.hpp"
#include "confband/efficiency.hpp"
#include "confband/bspline.hpp"
#include "confband/mvn.hpp"
#include "confband/scenario.hpp"
#include "confband/experiment.hpp"
#include "confband/io.hpp"
