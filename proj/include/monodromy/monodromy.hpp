#pragma once

// Umbrella header.

#include "monodromy/bifurcation.hpp"
#include "monodromy/chern.hpp"
#include "monodromy/dual.hpp"
#include "monodromy/error.hpp"
#include "monodromy/expr.hpp"
#include "monodromy/extremum.hpp"
#include "monodromy/fixed_points.hpp"
#include "monodromy/integrate.hpp"
#include "monodromy/io.hpp"
#include "monodromy/linalg.hpp"
#include "monodromy/parallel.hpp"
#include "monodromy/pipeline.hpp"
#include "monodromy/rotation.hpp"
#include "monodromy/system.hpp"
