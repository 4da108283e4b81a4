#pragma once

#include "dlime/clustering.hpp"
#include "dlime/core.hpp"
#include "dlime/data.hpp"
#include "dlime/explainers.hpp"
#include "dlime/external_model.hpp"
#include "dlime/mlp.hpp"
#include "dlime/model.hpp"
#include "dlime/neighbors.hpp"
#include "dlime/pipeline.hpp"
#include "dlime/random_forest.hpp"
#include "dlime/rng.hpp"
#include "dlime/stability.hpp"
#include "dlime/surrogate.hpp"
#include "dlime/svg.hpp"
