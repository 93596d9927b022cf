#pragma once

// Synthetic grid space: per (incidence, uncorrected OR) stratum, a 2x2 table
// with a fixed pooled incidence and odds ratio is corrected at 20 x 20
// (sensitivity, specificity) combinations.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qba/correction.hpp"
#include "qba/error.hpp"
#include "qba/sweep.hpp"

namespace qba {

/// whole: a and b rounded half-to-even to integers after solving; this is
/// the construction that matches the reference strata. expected: the
/// exact real-valued solution.
enum class CountMode { whole, expected };

struct ScenarioSpec {
    double incidence = 0.1;
    double uncorrected_or = 1.0;
    double n_per_arm = 1'000'000.0;
    CountMode counts = CountMode::whole;

    void validate() const;
};

/// Real-valued table with (a + b) / 2N = incidence and ad / bc = odds_ratio.
/// Throws Error(no_feasible_table) when no root of the quadratic in b lies
/// strictly inside the arm.
ObservedTable solve_pooled_table(double incidence, double odds_ratio, double n_per_arm);

ObservedTable build_synthetic_table(const ScenarioSpec& spec);

double round_half_even(double x) noexcept;

inline constexpr std::size_t kAxisPoints = 20;

struct GridAxes {
    std::vector<double> sensitivities;  // j / 20, j = 1..20
    std::vector<double> specificities;  // (1 - ip) + k * ip / 19, k = 0..19; last is exactly 1

    static GridAxes for_incidence(double incidence);
};

enum class DistributionPoint { min, p25, p50, p75, max };

inline constexpr std::array<DistributionPoint, 5> kDistributionPoints = {
    DistributionPoint::min, DistributionPoint::p25, DistributionPoint::p50, DistributionPoint::p75,
    DistributionPoint::max};

struct PercentileRow {
    DistributionPoint point = DistributionPoint::min;
    double or_qba = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double bias_difference = 0.0;
    double relative_bias = 0.0;
    std::size_t cell_index = 0;  // into StratumResult::cells
};

struct StratumResult {
    ScenarioSpec scenario;
    ObservedTable table;
    double realized_or = 0.0;
    GridAxes axes;
    std::vector<SweepCell> cells;  // sensitivity-major, 400 entries
    std::size_t valid_cells = 0;
    std::vector<PercentileRow> rows;  // one per kDistributionPoints entry

    double estimable_proportion() const {
        return static_cast<double>(valid_cells) / static_cast<double>(cells.size());
    }
    const PercentileRow& row(DistributionPoint p) const;
};

/// 1-based order statistic used for the p-th percentile of m sorted values:
/// round-half-even(p * m), at least 1.
std::size_t percentile_rank(double p, std::size_t m);

StratumResult sweep_stratum(const ScenarioSpec& spec);

struct SpaceAxes {
    std::vector<double> incidences{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<double> odds_ratios{1.001, 1.25, 1.5, 2.0, 4.0, 10.0};
    double n_per_arm = 1'000'000.0;
    CountMode counts = CountMode::whole;
};

struct StratumOutcome {
    ScenarioSpec scenario;
    std::optional<StratumResult> result;
    std::optional<ErrorCode> error_code;
    std::string error;

    bool ok() const noexcept { return result.has_value(); }
};

/// Strata in incidence-descending, OR-ascending order. A failing stratum
/// carries its error instead of aborting the space.
std::vector<StratumOutcome> full_space(const SpaceAxes& axes = {},
                                       Execution execution = Execution::parallel,
                                       int threads = 0);

struct EstimableRow {
    double incidence = 0.0;
    double uncorrected_or = 0.0;
    std::size_t valid_cells = 0;
    double estimable_proportion = 0.0;
};

/// One row per successful stratum, in space order.
std::vector<EstimableRow> estimable_curve(const std::vector<StratumOutcome>& space);

std::string_view to_string(DistributionPoint p) noexcept;
std::string_view to_string(CountMode m) noexcept;
DistributionPoint parse_distribution_point(std::string_view name);
CountMode parse_count_mode(std::string_view name);

}  // namespace qba
