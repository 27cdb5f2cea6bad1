#pragma once

#include "ambivol/error.hpp"

#include "ambivol/core/ambiguity.hpp"
#include "ambivol/core/io.hpp"
#include "ambivol/core/parallel.hpp"
#include "ambivol/core/rng.hpp"
#include "ambivol/core/scenario.hpp"
#include "ambivol/core/volatility_set.hpp"

#include "ambivol/lattice/aggregator.hpp"
#include "ambivol/lattice/dynamic_consistency.hpp"
#include "ambivol/lattice/lattice.hpp"
#include "ambivol/lattice/utility.hpp"

#include "ambivol/pde/black_scholes.hpp"
#include "ambivol/pde/bsb.hpp"

#include "ambivol/pricing/market.hpp"
#include "ambivol/pricing/monte_carlo.hpp"
#include "ambivol/pricing/state_prices.hpp"

#include "ambivol/equilibrium/endowment.hpp"
#include "ambivol/equilibrium/equilibrium.hpp"
#include "ambivol/equilibrium/supergradient.hpp"
