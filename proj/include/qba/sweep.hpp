#pragma once

// Non-differential multidimensional correction over a (sensitivity,
// specificity) lattice for one observed table.

#include <cstddef>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "qba/correction.hpp"

namespace qba {

enum class Execution { serial, parallel };

struct SweepSpec {
    ObservedTable table;
    double sens_min = 0.0;
    double sens_max = 1.0;
    double spec_min = 0.0;
    double spec_max = 1.0;
    double step = 1e-4;

    void validate() const;
    std::vector<double> sensitivity_axis() const;
    std::vector<double> specificity_axis() const;
    std::size_t grid_size() const;
};

/// Inclusive axis min + k*step, k = 0..K-1, last value clamped to max.
std::vector<double> axis_values(double min, double max, double step);

/// Window of +/- half_width around `center`, clamped to [0, 1].
SweepSpec window_around(const ObservedTable& table, const ArmErrors& center,
                        double half_width = 0.05, double step = 1e-4);

enum class CellFailure { negative_cell, cell_exceeds_total, zero_denominator, zero_cell };

struct SweepCell {
    double sensitivity = 0.0;
    double specificity = 0.0;
    bool valid = false;
    double or_qba = 0.0;  // meaningful iff valid
    double se_qba = 0.0;  // woolf_corrected; meaningful iff valid
    std::optional<CellFailure> reason;

    friend bool operator==(const SweepCell&, const SweepCell&) = default;
};

/// One lattice point: correct_table followed by corrected_estimate.
SweepCell evaluate_cell(const ObservedTable& table, double sensitivity, double specificity);

enum class FrontierMethod { binary, linear };

struct FrontierRow {
    double sensitivity = 0.0;
    std::optional<double> min_specificity;  // absent: never valid on this row
    FrontierMethod method = FrontierMethod::linear;
    bool monotone = true;  // valid set is an upper interval of the axis

    friend bool operator==(const FrontierRow&, const FrontierRow&) = default;
};

struct ValidityFrontier {
    std::vector<FrontierRow> rows;

    std::vector<double> non_monotone_sensitivities() const;
};

/// True when every arm has positives < total * sensitivity. Validity is
/// then provably an upper interval in specificity, so bisection is exact.
bool frontier_is_monotone(const ObservedTable& table, double sensitivity);

struct SweepOptions {
    std::size_t cell_cap = 10'000'000;
    Execution execution = Execution::parallel;
    int threads = 0;  // 0: OpenMP default
};

enum class SweepEmit { full_grid, frontier_only };

using SweepOutput = std::variant<std::vector<SweepCell>, ValidityFrontier>;

/// Row-major (sensitivity-major, ascending) cells. Throws
/// Error(grid_too_large) above options.cell_cap.
std::vector<SweepCell> sweep_grid(const SweepSpec& spec, const SweepOptions& options = {});

ValidityFrontier sweep_frontier(const SweepSpec& spec, const SweepOptions& options = {});

SweepOutput run_sweep(const SweepSpec& spec, SweepEmit emit = SweepEmit::frontier_only,
                      const SweepOptions& options = {});

std::string_view to_string(CellFailure f) noexcept;
std::string_view to_string(FrontierMethod m) noexcept;
CellFailure parse_cell_failure(std::string_view name);

}  // namespace qba
