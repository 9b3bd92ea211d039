#pragma once

#include "analysis.hh"
#include "block_state.hh"
#include "description_length.hh"
#include "generators.hh"
#include "graph.hh"
#include "log_math.hh"
#include "mcmc.hh"
#include "partition.hh"
