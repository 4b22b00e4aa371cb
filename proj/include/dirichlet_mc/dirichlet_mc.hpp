#ifndef DIRICHLET_MC_DIRICHLET_MC_HPP
#define DIRICHLET_MC_DIRICHLET_MC_HPP

#include "analysis.hpp"
#include "core.hpp"
#include "estimators.hpp"
#include "linalg.hpp"
#include "mcspace.hpp"
#include "poisson.hpp"
#include "presets.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "sampling.hpp"
#include "wiener.hpp"

#endif
