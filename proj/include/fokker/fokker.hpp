#pragma once

// Umbrella header.

#include "fokker/action.hpp"
#include "fokker/canonical.hpp"
#include "fokker/config.hpp"
#include "fokker/coulomb.hpp"
#include "fokker/delta.hpp"
#include "fokker/eigs.hpp"
#include "fokker/errors.hpp"
#include "fokker/grid.hpp"
#include "fokker/lattice.hpp"
#include "fokker/numeric.hpp"
#include "fokker/random_paths.hpp"
#include "fokker/scan.hpp"
#include "fokker/serialize.hpp"
#include "fokker/solver.hpp"
#include "fokker/trajectory.hpp"
