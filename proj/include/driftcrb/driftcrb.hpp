#pragma once

// Single include for the whole library: estimation bounds for polynomial
// signals observed through sensors with additive white noise and AR(1)
// drift, plus the simulation and experiment machinery validating them.

#include "driftcrb/errors.hpp"
#include "driftcrb/model.hpp"
#include "driftcrb/covariance.hpp"
#include "driftcrb/approximation.hpp"
#include "driftcrb/quadrature.hpp"
#include "driftcrb/fisher.hpp"
#include "driftcrb/closed_form.hpp"
#include "driftcrb/simulate.hpp"
#include "driftcrb/experiments.hpp"
