#pragma once

// Umbrella header for the rate-independent evolution toolkit: incremental
// viscous solves, arc-length reparameterization by the contact potential,
// vanishing-viscosity sweeps and their certificates.

#include "rateindep/bv_load.hpp"
#include "rateindep/certificates.hpp"
#include "rateindep/dissipation.hpp"
#include "rateindep/energy.hpp"
#include "rateindep/errors.hpp"
#include "rateindep/estimates.hpp"
#include "rateindep/kurzweil.hpp"
#include "rateindep/linalg.hpp"
#include "rateindep/partition.hpp"
#include "rateindep/piecewise_curve.hpp"
#include "rateindep/prox_step.hpp"
#include "rateindep/reparameterize.hpp"
#include "rateindep/report.hpp"
#include "rateindep/run_config.hpp"
#include "rateindep/scenarios.hpp"
#include "rateindep/spd_operator.hpp"
#include "rateindep/sweep.hpp"
#include "rateindep/trajectory.hpp"
