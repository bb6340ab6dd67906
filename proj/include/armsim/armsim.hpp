#ifndef ARMSIM_ARMSIM_HPP
#define ARMSIM_ARMSIM_HPP

#include "analysis.hpp"
#include "calibrate.hpp"
#include "config.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "empirical.hpp"
#include "errors.hpp"
#include "integrate.hpp"
#include "physics_heat.hpp"
#include "physics_hm.hpp"
#include "run.hpp"
#include "signal.hpp"

#endif
