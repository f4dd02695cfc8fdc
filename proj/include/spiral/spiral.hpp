#pragma once

#include "spiral/bench.hpp"
#include "spiral/em_mple.hpp"
#include "spiral/io.hpp"
#include "spiral/partition.hpp"
#include "spiral/plot.hpp"
#include "spiral/poisson_model.hpp"
#include "spiral/prox_dual.hpp"
#include "spiral/prox_l1.hpp"
#include "spiral/random.hpp"
#include "spiral/sensing_matrix.hpp"
#include "spiral/solver.hpp"
#include "spiral/trace.hpp"
#include "spiral/transforms.hpp"
#include "spiral/types.hpp"
