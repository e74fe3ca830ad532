#pragma once

// Umbrella header.

#include "nmlab/a2c.hpp"
#include "nmlab/analysis.hpp"
#include "nmlab/checkpoint.hpp"
#include "nmlab/config.hpp"
#include "nmlab/evolution.hpp"
#include "nmlab/genotype.hpp"
#include "nmlab/graph.hpp"
#include "nmlab/guided.hpp"
#include "nmlab/inspect.hpp"
#include "nmlab/lifetime.hpp"
#include "nmlab/matrix.hpp"
#include "nmlab/mlp.hpp"
#include "nmlab/mutation.hpp"
#include "nmlab/parallel.hpp"
#include "nmlab/phenotype.hpp"
#include "nmlab/rng.hpp"
#include "nmlab/run.hpp"
#include "nmlab/serialize.hpp"
#include "nmlab/tables.hpp"
#include "nmlab/task.hpp"
