#pragma once

#include "scatter/common.hpp"
#include "scatter/dataset.hpp"
#include "scatter/experiment.hpp"
#include "scatter/gcn.hpp"
#include "scatter/gp.hpp"
#include "scatter/graph.hpp"
#include "scatter/io.hpp"
#include "scatter/kmeans.hpp"
#include "scatter/sampling.hpp"
#include "scatter/simbench.hpp"
#include "scatter/synth.hpp"
