#pragma once

#include "assign.hpp"
#include "common.hpp"
#include "dataset.hpp"
#include "fit.hpp"
#include "gmm.hpp"
#include "grid_density.hpp"
#include "io.hpp"
#include "kmeans.hpp"
#include "metrics.hpp"
#include "model_io.hpp"
#include "synthetic.hpp"
