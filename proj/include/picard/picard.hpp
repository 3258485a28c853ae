#pragma once

#include "picard/bench.hpp"
#include "picard/chain_fixpoint.hpp"
#include "picard/cli.hpp"
#include "picard/expr.hpp"
#include "picard/grid.hpp"
#include "picard/norm.hpp"
#include "picard/picard_complex.hpp"
#include "picard/picard_real.hpp"
#include "picard/report.hpp"
#include "picard/series.hpp"
#include "picard/series_solver.hpp"
