#pragma once

// Umbrella header.

#include "hitlab/kernels.hpp"
#include "hitlab/covariance.hpp"
#include "hitlab/rng.hpp"
#include "hitlab/sampler.hpp"
#include "hitlab/regularity.hpp"
#include "hitlab/hitting.hpp"
#include "hitlab/potential.hpp"
#include "hitlab/ou.hpp"
#include "hitlab/experiment.hpp"
