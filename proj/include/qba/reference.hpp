#pragma once

// Straightforward serial versions of the sweep and aggregation kernels.
// Tests and benchmarks compare the OpenMP paths against these.

#include <span>
#include <vector>

#include "qba/error_estimation.hpp"
#include "qba/sweep.hpp"

namespace qba::reference {

/// Nested loop over both axes; each cell goes through correct_table and a
/// Woolf estimate on the corrected table.
std::vector<SweepCell> sweep_grid(const SweepSpec& spec);

/// Linear scan of every row: first valid specificity, plus whether any
/// invalid point follows it.
ValidityFrontier sweep_frontier(const SweepSpec& spec);

/// Left fold in record order.
ConfusionSums confusion(std::span<const EvaluationRecord> records);

}  // namespace qba::reference
