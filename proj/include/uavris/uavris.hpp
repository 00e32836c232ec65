#ifndef UAVRIS_UAVRIS_HPP
#define UAVRIS_UAVRIS_HPP

#include "channel.hpp"
#include "cone.hpp"
#include "cone_solver.hpp"
#include "oracle.hpp"
#include "orchestrate.hpp"
#include "phase_opt.hpp"
#include "power.hpp"
#include "report.hpp"
#include "sca.hpp"
#include "scenario.hpp"

#endif  // UAVRIS_UAVRIS_HPP
