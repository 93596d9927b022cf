#pragma once

// Iso-lines of corrected OR over a stratum's (sensitivity, specificity)
// lattice, via marching squares with masked (invalid) lattice points.

#include <optional>
#include <vector>

#include "qba/synthspace.hpp"

namespace qba {

struct LatticePoint {
    double sensitivity = 0.0;
    double specificity = 0.0;
};

using Polyline = std::vector<LatticePoint>;

/// Marching squares on a lattice with x = xs (outer index) and y = ys
/// (inner index); field[i * ys.size() + j]. A square is skipped when any
/// corner is masked. Crossings are linearly interpolated along lattice
/// edges; saddles are resolved by the mean of the four corners.
std::vector<Polyline> iso_lines(const std::vector<double>& xs, const std::vector<double>& ys,
                                const std::vector<std::optional<double>>& field, double level);

struct ContourLevel {
    DistributionPoint point = DistributionPoint::p50;
    double value = 0.0;
    std::vector<Polyline> polylines;
};

struct ContourSet {
    double incidence = 0.0;
    double uncorrected_or = 0.0;
    std::vector<ContourLevel> levels;  // 25th, 50th, 75th percentile ORs
    PercentileRow min;
    PercentileRow max;
};

/// Throws Error(too_few_valid_cells) below three valid lattice points.
ContourSet contour_lines(const StratumResult& stratum);

}  // namespace qba
