// SPDX-License-Identifier: Apache-2.0
#pragma once

// Umbrella header for the cut-Bayes SMC library.

#include "cutsmc/baseline.hpp"
#include "cutsmc/bounds.hpp"
#include "cutsmc/config.hpp"
#include "cutsmc/errors.hpp"
#include "cutsmc/experiment.hpp"
#include "cutsmc/external_model.hpp"
#include "cutsmc/io.hpp"
#include "cutsmc/kernels.hpp"
#include "cutsmc/model.hpp"
#include "cutsmc/rng.hpp"
#include "cutsmc/sequencing.hpp"
#include "cutsmc/smc.hpp"
#include "cutsmc/vecmath.hpp"
