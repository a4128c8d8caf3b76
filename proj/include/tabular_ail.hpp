#pragma once

#include "tabular_ail/core.hpp"
#include "tabular_ail/mdp.hpp"
#include "tabular_ail/mdp_io.hpp"
#include "tabular_ail/envs.hpp"
#include "tabular_ail/environment.hpp"
#include "tabular_ail/rfe.hpp"
#include "tabular_ail/estimators.hpp"
#include "tabular_ail/saddle.hpp"
#include "tabular_ail/abstraction.hpp"
#include "tabular_ail/algorithms.hpp"
#include "tabular_ail/stats.hpp"
#include "tabular_ail/harness.hpp"
