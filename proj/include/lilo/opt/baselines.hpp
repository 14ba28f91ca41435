#pragma once

#include "lilo/env/environment.hpp"
#include "lilo/opt/config.hpp"
#include "lilo/opt/trace.hpp"

namespace lilo::opt {

/// Scalar ground-truth utilities on B_pf outcomes per trial.
Trace run_true_utility_bo(const env::Environment& env, const LoopConfig& config);

/// Exact pairwise labels on B_pf outcome pairs per trial.
Trace run_preferential_bo(const env::Environment& env, const LoopConfig& config);

}  // namespace lilo::opt
