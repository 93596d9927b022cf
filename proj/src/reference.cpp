#include "qba/reference.hpp"

namespace qba::reference {

namespace {

CellFailure failure_of(const InvalidCorrection& inv) {
    const ArmCorrection& arm = inv.target.in_range() ? inv.comparator : inv.target;
    switch (*arm.reason) {
    case InvalidReason::negative_cell: return CellFailure::negative_cell;
    case InvalidReason::cell_exceeds_total: return CellFailure::cell_exceeds_total;
    case InvalidReason::zero_denominator: return CellFailure::zero_denominator;
    }
    return CellFailure::negative_cell;
}

SweepCell cell_at(const ObservedTable& table, double se, double sp) {
    SweepCell cell{se, sp, false, 0.0, 0.0, std::nullopt};
    const CorrectionResult r = correct_table(table, ErrorModel::non_differential({se, sp}));
    if (!r.valid()) {
        cell.reason = failure_of(r.invalid());
        return cell;
    }
    const ObservedTable t = r.table().as_table();
    if (t.a <= 0.0 || t.b <= 0.0 || t.c() <= 0.0 || t.d() <= 0.0) {
        cell.reason = CellFailure::zero_cell;
        return cell;
    }
    const EffectEstimate e = odds_ratio_estimate(t);
    cell.valid = true;
    cell.or_qba = e.odds_ratio;
    cell.se_qba = e.se_log_or;
    return cell;
}

}  // namespace

std::vector<SweepCell> sweep_grid(const SweepSpec& spec) {
    spec.validate();
    std::vector<SweepCell> cells;
    for (double se : spec.sensitivity_axis()) {
        for (double sp : spec.specificity_axis()) cells.push_back(cell_at(spec.table, se, sp));
    }
    return cells;
}

ValidityFrontier sweep_frontier(const SweepSpec& spec) {
    spec.validate();
    const std::vector<double> sp_axis = spec.specificity_axis();
    ValidityFrontier f;
    for (double se : spec.sensitivity_axis()) {
        FrontierRow row{se, std::nullopt, FrontierMethod::linear, true};
        for (double sp : sp_axis) {
            const bool v = cell_at(spec.table, se, sp).valid;
            if (v && !row.min_specificity) row.min_specificity = sp;
            if (!v && row.min_specificity) row.monotone = false;
        }
        f.rows.push_back(row);
    }
    return f;
}

ConfusionSums confusion(std::span<const EvaluationRecord> records) {
    ConfusionSums s;
    for (const EvaluationRecord& r : records) s.add(r);
    return s;
}

}  // namespace qba::reference
