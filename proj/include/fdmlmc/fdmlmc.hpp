#pragma once

#include "fdmlmc/analysis.hpp"
#include "fdmlmc/config.hpp"
#include "fdmlmc/errors.hpp"
#include "fdmlmc/experiment.hpp"
#include "fdmlmc/fractional_operator.hpp"
#include "fdmlmc/mc.hpp"
#include "fdmlmc/mesh.hpp"
#include "fdmlmc/mlmc.hpp"
#include "fdmlmc/model.hpp"
#include "fdmlmc/parallel.hpp"
#include "fdmlmc/philox.hpp"
#include "fdmlmc/solver.hpp"
