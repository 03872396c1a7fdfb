#pragma once

#include "panfuse/errors.hpp"
#include "panfuse/tensor.hpp"
#include "panfuse/operators.hpp"
#include "panfuse/prox.hpp"
#include "panfuse/solver.hpp"
#include "panfuse/metrics.hpp"
#include "panfuse/sim.hpp"
#include "panfuse/io.hpp"
