#pragma once

// Umbrella header: the dense-network engine, the plasticity-preserving
// reinitialization algorithms, the permuted-task benchmark harness and its
// runner plumbing.

#include "plastlab/config.hpp"
#include "plastlab/continual.hpp"
#include "plastlab/csv.hpp"
#include "plastlab/dataio.hpp"
#include "plastlab/errors.hpp"
#include "plastlab/init_spec.hpp"
#include "plastlab/matrix.hpp"
#include "plastlab/metrics.hpp"
#include "plastlab/network.hpp"
#include "plastlab/optim.hpp"
#include "plastlab/reinit.hpp"
#include "plastlab/rng.hpp"
#include "plastlab/runner.hpp"
#include "plastlab/svg_plot.hpp"
#include "plastlab/synth.hpp"
#include "plastlab/task_stream.hpp"
