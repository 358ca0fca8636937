#pragma once

// Umbrella header for the weak-value-amplification hypothesis-testing
// library.

#include "wva/errors.hpp"
#include "wva/hypothesis_testing.hpp"
#include "wva/monte_carlo.hpp"
#include "wva/postselection_loss.hpp"
#include "wva/probe_distributions.hpp"
#include "wva/quadrature.hpp"
#include "wva/reports.hpp"
#include "wva/rng.hpp"
#include "wva/special.hpp"
#include "wva/two_state.hpp"
