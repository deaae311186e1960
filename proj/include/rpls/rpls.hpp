#pragma once

// Umbrella header: pulls in the whole public surface.

#include "rpls/errors.hpp"
#include "rpls/types.hpp"
#include "rpls/rng.hpp"
#include "rpls/standardize.hpp"
#include "rpls/linalg.hpp"
#include "rpls/penalties.hpp"
#include "rpls/solver.hpp"
#include "rpls/operators.hpp"
#include "rpls/pipeline.hpp"
#include "rpls/selection.hpp"
#include "rpls/prediction.hpp"
#include "rpls/io.hpp"
#include "rpls/simbench.hpp"
