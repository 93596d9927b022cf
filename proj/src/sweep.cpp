#include "qba/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <omp.h>

#include "qba/error.hpp"

namespace qba {

namespace {

bool in_unit(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::size_t axis_count(double min, double max, double step) {
    return static_cast<std::size_t>(std::floor((max - min) / step * (1.0 + 1e-12) + 1e-9)) + 1;
}

CellFailure to_failure(InvalidReason r) {
    switch (r) {
    case InvalidReason::negative_cell: return CellFailure::negative_cell;
    case InvalidReason::cell_exceeds_total: return CellFailure::cell_exceeds_total;
    case InvalidReason::zero_denominator: return CellFailure::zero_denominator;
    }
    return CellFailure::negative_cell;
}

int thread_count(const SweepOptions& o) { return o.threads > 0 ? o.threads : omp_get_max_threads(); }

FrontierRow bisect_row(const ObservedTable& table, double se, const std::vector<double>& spec) {
    FrontierRow row{se, std::nullopt, FrontierMethod::binary, true};
    const auto valid = [&](std::size_t k) { return evaluate_cell(table, se, spec[k]).valid; };
    std::size_t hi = spec.size() - 1;
    if (!valid(hi)) return row;
    // Invariant: valid(hi); every index <= lo (if any) is invalid.
    std::ptrdiff_t lo = -1;
    while (static_cast<std::ptrdiff_t>(hi) - lo > 1) {
        const std::size_t mid = static_cast<std::size_t>(lo + (static_cast<std::ptrdiff_t>(hi) - lo) / 2);
        if (valid(mid)) {
            hi = mid;
        } else {
            lo = static_cast<std::ptrdiff_t>(mid);
        }
    }
    row.min_specificity = spec[hi];
    return row;
}

FrontierRow scan_row(const ObservedTable& table, double se, const std::vector<double>& spec) {
    FrontierRow row{se, std::nullopt, FrontierMethod::linear, true};
    bool seen_valid = false;
    for (double sp : spec) {
        const bool v = evaluate_cell(table, se, sp).valid;
        if (v && !seen_valid) {
            row.min_specificity = sp;
            seen_valid = true;
        } else if (!v && seen_valid) {
            row.monotone = false;
        }
    }
    return row;
}

}  // namespace

void SweepSpec::validate() const {
    table.validate();
    if (!(in_unit(sens_min) && in_unit(sens_max) && sens_min <= sens_max)) {
        throw Error(ErrorCode::invalid_argument, "sensitivity window must satisfy 0 <= min <= max <= 1");
    }
    if (!(in_unit(spec_min) && in_unit(spec_max) && spec_min <= spec_max)) {
        throw Error(ErrorCode::invalid_argument, "specificity window must satisfy 0 <= min <= max <= 1");
    }
    if (!(std::isfinite(step) && step > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "step must be positive");
    }
}

std::vector<double> axis_values(double min, double max, double step) {
    const std::size_t count = axis_count(min, max, step);
    std::vector<double> v(count);
    for (std::size_t k = 0; k < count; ++k) {
        v[k] = std::min(min + static_cast<double>(k) * step, max);
    }
    return v;
}

std::vector<double> SweepSpec::sensitivity_axis() const { return axis_values(sens_min, sens_max, step); }
std::vector<double> SweepSpec::specificity_axis() const { return axis_values(spec_min, spec_max, step); }

std::size_t SweepSpec::grid_size() const {
    return axis_count(sens_min, sens_max, step) * axis_count(spec_min, spec_max, step);
}

SweepSpec window_around(const ObservedTable& table, const ArmErrors& center, double half_width,
                        double step) {
    center.validate();
    SweepSpec s;
    s.table = table;
    s.sens_min = std::max(0.0, center.sensitivity - half_width);
    s.sens_max = std::min(1.0, center.sensitivity + half_width);
    s.spec_min = std::max(0.0, center.specificity - half_width);
    s.spec_max = std::min(1.0, center.specificity + half_width);
    s.step = step;
    return s;
}

SweepCell evaluate_cell(const ObservedTable& table, double sensitivity, double specificity) {
    SweepCell cell;
    cell.sensitivity = sensitivity;
    cell.specificity = specificity;
    const ErrorModel errors = ErrorModel::non_differential({sensitivity, specificity});
    const CorrectionResult result = correct_table(table, errors);
    if (!result.valid()) {
        const auto& inv = result.invalid();
        cell.reason = to_failure(inv.target.reason ? *inv.target.reason : *inv.comparator.reason);
        return cell;
    }
    const CorrectedTable& t = result.table();
    if (!(t.A > 0.0 && t.B > 0.0 && t.C() > 0.0 && t.D() > 0.0)) {
        cell.reason = CellFailure::zero_cell;
        return cell;
    }
    const EffectEstimate est = corrected_estimate(t, table, errors, VarianceMethod::woolf_corrected);
    cell.valid = true;
    cell.or_qba = est.odds_ratio;
    cell.se_qba = est.se_log_or;
    return cell;
}

bool frontier_is_monotone(const ObservedTable& table, double sensitivity) {
    return table.a < table.n_target * sensitivity && table.b < table.n_comparator * sensitivity;
}

std::vector<double> ValidityFrontier::non_monotone_sensitivities() const {
    std::vector<double> out;
    for (const auto& r : rows) {
        if (!r.monotone) out.push_back(r.sensitivity);
    }
    return out;
}

std::vector<SweepCell> sweep_grid(const SweepSpec& spec, const SweepOptions& options) {
    spec.validate();
    if (spec.grid_size() > options.cell_cap) {
        throw Error(ErrorCode::grid_too_large, "grid of " + std::to_string(spec.grid_size()) +
                                                   " cells exceeds cap of " +
                                                   std::to_string(options.cell_cap));
    }
    const std::vector<double> sens = spec.sensitivity_axis();
    const std::vector<double> spec_axis = spec.specificity_axis();
    const std::size_t cols = spec_axis.size();
    const auto rows = static_cast<std::ptrdiff_t>(sens.size());
    std::vector<SweepCell> cells(sens.size() * cols);
    const bool parallel = options.execution == Execution::parallel;

#pragma omp parallel for schedule(static) if (parallel) num_threads(thread_count(options))
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const std::size_t base = static_cast<std::size_t>(r) * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            cells[base + c] = evaluate_cell(spec.table, sens[static_cast<std::size_t>(r)], spec_axis[c]);
        }
    }
    return cells;
}

ValidityFrontier sweep_frontier(const SweepSpec& spec, const SweepOptions& options) {
    spec.validate();
    const std::vector<double> sens = spec.sensitivity_axis();
    const std::vector<double> spec_axis = spec.specificity_axis();
    const auto rows = static_cast<std::ptrdiff_t>(sens.size());
    ValidityFrontier frontier;
    frontier.rows.resize(sens.size());
    const bool parallel = options.execution == Execution::parallel;

#pragma omp parallel for schedule(dynamic, 16) if (parallel) num_threads(thread_count(options))
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const double se = sens[static_cast<std::size_t>(r)];
        frontier.rows[static_cast<std::size_t>(r)] = frontier_is_monotone(spec.table, se)
                                                         ? bisect_row(spec.table, se, spec_axis)
                                                         : scan_row(spec.table, se, spec_axis);
    }
    return frontier;
}

SweepOutput run_sweep(const SweepSpec& spec, SweepEmit emit, const SweepOptions& options) {
    if (emit == SweepEmit::full_grid) return sweep_grid(spec, options);
    return sweep_frontier(spec, options);
}

std::string_view to_string(CellFailure f) noexcept {
    switch (f) {
    case CellFailure::negative_cell: return "negative_cell";
    case CellFailure::cell_exceeds_total: return "cell_exceeds_total";
    case CellFailure::zero_denominator: return "zero_denominator";
    case CellFailure::zero_cell: return "zero_cell";
    }
    return "?";
}

std::string_view to_string(FrontierMethod m) noexcept {
    return m == FrontierMethod::binary ? "binary" : "linear";
}

CellFailure parse_cell_failure(std::string_view name) {
    if (name == "negative_cell") return CellFailure::negative_cell;
    if (name == "cell_exceeds_total") return CellFailure::cell_exceeds_total;
    if (name == "zero_denominator") return CellFailure::zero_denominator;
    if (name == "zero_cell") return CellFailure::zero_cell;
    throw Error(ErrorCode::parse_error, "unknown cell failure: " + std::string(name));
}

}  // namespace qba
