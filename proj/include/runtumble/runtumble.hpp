#pragma once
// Convenience umbrella for the whole library.

#include "runtumble/chemo_field.hpp"
#include "runtumble/config.hpp"
#include "runtumble/control_process.hpp"
#include "runtumble/coupled_ensemble.hpp"
#include "runtumble/csv.hpp"
#include "runtumble/density_estimation.hpp"
#include "runtumble/experiments.hpp"
#include "runtumble/internal_process.hpp"
#include "runtumble/kinetic_grid.hpp"
#include "runtumble/mesh.hpp"
#include "runtumble/model_params.hpp"
#include "runtumble/parallel.hpp"
#include "runtumble/random_streams.hpp"
#include "runtumble/slope_fit.hpp"
#include "runtumble/variance_reduction.hpp"
#include "runtumble/velocity_jump.hpp"
#include "runtumble/version.hpp"
