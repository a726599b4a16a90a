#pragma once

#include <functional>
#include <string>
#include <vector>

#include "protocell/response.hpp"
#include "protocell/solver.hpp"

namespace protocell {

using ProgressLog = std::function<void(const std::string&)>;

/// One record per (k1, k2, Q), ordered k1 outermost and Q innermost. Each
/// point starts from the cached base flow of its Q and is solved on its own,
/// so the table does not depend on evaluation order or the worker count.
/// Points that fail become explicit non-converged records. Alpha sweeps
/// ignore k2 and use k1 as k_app.
ResponseTable parametric_sweep(const ModelConfig& config, const std::vector<double>& k1_set,
                               const std::vector<double>& k2_set, const std::vector<double>& q_set,
                               int workers = 1, const ProgressLog& log = {});

/// Workers used for `requested` (0: hardware concurrency) over `points` points.
int effective_workers(int requested, std::size_t points);

}  // namespace protocell
