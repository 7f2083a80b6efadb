#pragma once

// Umbrella header.

#include "calculus.hpp"
#include "config.hpp"
#include "energy.hpp"
#include "evolution.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "operators.hpp"
#include "oracles.hpp"
#include "regime.hpp"
#include "symfn.hpp"
