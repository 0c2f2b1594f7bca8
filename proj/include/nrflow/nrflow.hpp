#ifndef NRFLOW_NRFLOW_HPP
#define NRFLOW_NRFLOW_HPP

#include "nrflow/config_io.hpp"
#include "nrflow/errors.hpp"
#include "nrflow/metrics.hpp"
#include "nrflow/nr_controller.hpp"
#include "nrflow/outputs.hpp"
#include "nrflow/planner.hpp"
#include "nrflow/plots.hpp"
#include "nrflow/safety_cbf.hpp"
#include "nrflow/scenario.hpp"
#include "nrflow/trace.hpp"
#include "nrflow/vehicle_dynamics.hpp"

#endif  // NRFLOW_NRFLOW_HPP
