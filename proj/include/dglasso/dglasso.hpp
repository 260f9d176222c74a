#ifndef DGLASSO_DGLASSO_HPP
#define DGLASSO_DGLASSO_HPP

#include "dglasso/core.hpp"
#include "dglasso/datagen.hpp"
#include "dglasso/inner.hpp"
#include "dglasso/lgssm.hpp"
#include "dglasso/metrics.hpp"
#include "dglasso/proxops.hpp"
#include "dglasso/rng.hpp"
#include "dglasso/solver.hpp"

#endif  // DGLASSO_DGLASSO_HPP
