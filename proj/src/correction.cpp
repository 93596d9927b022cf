#include "qba/correction.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "qba/error.hpp"

namespace qba {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw Error(ErrorCode::invalid_argument, message);
}

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

// x - n(1 - sp) is a difference of two quantities that each carry about one
// ulp of error scaled by n; anything below this is indistinguishable from 0.
double cancellation_tolerance(double x, double n) {
    return 8.0 * std::numeric_limits<double>::epsilon() * (std::fabs(x) + n);
}

Cell negative_partner(Cell positive) { return positive == Cell::A ? Cell::C : Cell::D; }

ArmCorrection correct_arm_cells(double x, double n, const ArmErrors& e, Cell positive) {
    ArmCorrection arm;
    const double fp_rate = 1.0 - e.specificity;
    const double tol = cancellation_tolerance(x, n);

    arm.numerator = x - n * fp_rate;
    arm.denominator = e.sensitivity - fp_rate;
    if (std::fabs(arm.numerator) <= tol) arm.numerator = 0.0;

    if (arm.denominator == 0.0) {
        arm.reason = InvalidReason::zero_denominator;
        arm.offending = {positive, negative_partner(positive)};
        return arm;
    }

    double value = arm.numerator / arm.denominator + 0.0;
    // Corrected negatives have numerator n*se - x over the same denominator.
    if (std::fabs(n * e.sensitivity - x) <= tol) value = n;
    arm.corrected = value;

    if (value < 0.0) {
        arm.reason = InvalidReason::negative_cell;
        arm.offending = {positive};
    } else if (value > n) {
        arm.reason = InvalidReason::cell_exceeds_total;
        arm.offending = {positive, negative_partner(positive)};
    }
    return arm;
}

EffectEstimate woolf(double a, double b, double c, double d, VarianceMethod method) {
    if (!(a > 0.0 && b > 0.0 && c > 0.0 && d > 0.0)) {
        throw Error(ErrorCode::zero_cell,
                    "odds ratio undefined: cells a=" + std::to_string(a) + " b=" + std::to_string(b) +
                        " c=" + std::to_string(c) + " d=" + std::to_string(d) +
                        " must all be positive");
    }
    EffectEstimate est;
    est.odds_ratio = (a * d) / (b * c);
    est.log_or = std::log(est.odds_ratio);
    est.se_log_or = std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    est.ci_lower = std::exp(est.log_or - kCiMultiplier * est.se_log_or);
    est.ci_upper = std::exp(est.log_or + kCiMultiplier * est.se_log_or);
    est.variance_method = method;
    return est;
}

double delta_arm_variance(double x, double n, double corrected, const ArmErrors& e) {
    const double youden = e.youden();
    const double binomial = x * (1.0 - x / n) / (youden * youden);
    const double jacobian = n / (corrected * (n - corrected));
    return binomial * jacobian * jacobian;
}

}  // namespace

ObservedTable ObservedTable::make(double a, double b, double n_target, double n_comparator) {
    ObservedTable t{a, b, n_target, n_comparator};
    t.validate();
    return t;
}

void ObservedTable::validate() const {
    require(std::isfinite(n_target) && n_target > 0.0, "n_target must be positive");
    require(std::isfinite(n_comparator) && n_comparator > 0.0, "n_comparator must be positive");
    require(std::isfinite(a) && a >= 0.0 && a <= n_target, "a must lie in [0, n_target]");
    require(std::isfinite(b) && b >= 0.0 && b <= n_comparator, "b must lie in [0, n_comparator]");
}

void ArmErrors::validate() const {
    require(is_probability(sensitivity), "sensitivity must lie in [0, 1]");
    require(is_probability(specificity), "specificity must lie in [0, 1]");
}

ErrorModel ErrorModel::non_differential(ArmErrors both) {
    both.validate();
    return {both, both, ErrorMode::non_differential};
}

ErrorModel ErrorModel::differential(ArmErrors target, ArmErrors comparator) {
    target.validate();
    comparator.validate();
    return {target, comparator, ErrorMode::differential};
}

ErrorModel ErrorModel::swapped() const noexcept { return {comparator_, target_, mode_}; }

EffectEstimate odds_ratio_estimate(const ObservedTable& table, VarianceMethod method) {
    require(method != VarianceMethod::delta_corrected,
            "delta_corrected needs an error model; use corrected_estimate");
    return woolf(table.a, table.b, table.c(), table.d(), method);
}

ArmCorrection correct_arm(double positives, double total, const ArmErrors& errors) {
    return correct_arm_cells(positives, total, errors, Cell::A);
}

CorrectionResult correct_table(const ObservedTable& observed, const ErrorModel& errors) {
    observed.validate();
    ArmCorrection t = correct_arm_cells(observed.a, observed.n_target, errors.target(), Cell::A);
    ArmCorrection c =
        correct_arm_cells(observed.b, observed.n_comparator, errors.comparator(), Cell::B);
    if (t.in_range() && c.in_range()) {
        return CorrectedTable{*t.corrected, *c.corrected, observed.n_target, observed.n_comparator};
    }
    return InvalidCorrection{std::move(t), std::move(c)};
}

ObservedTable misclassify(const ObservedTable& truth, const ErrorModel& errors) {
    truth.validate();
    auto observe = [](double x, double n, const ArmErrors& e) {
        return x * e.sensitivity + (n - x) * (1.0 - e.specificity);
    };
    return {observe(truth.a, truth.n_target, errors.target()),
            observe(truth.b, truth.n_comparator, errors.comparator()), truth.n_target,
            truth.n_comparator};
}

EffectEstimate corrected_estimate(const CorrectedTable& corrected, const ObservedTable& observed,
                                  const ErrorModel& errors, VarianceMethod method) {
    require(method != VarianceMethod::woolf_observed,
            "corrected estimates use woolf_corrected or delta_corrected");
    EffectEstimate est = woolf(corrected.A, corrected.B, corrected.C(), corrected.D(), method);
    if (method == VarianceMethod::delta_corrected) {
        const double var =
            delta_arm_variance(observed.a, observed.n_target, corrected.A, errors.target()) +
            delta_arm_variance(observed.b, observed.n_comparator, corrected.B, errors.comparator());
        est.se_log_or = std::sqrt(var);
        est.ci_lower = std::exp(est.log_or - kCiMultiplier * est.se_log_or);
        est.ci_upper = std::exp(est.log_or + kCiMultiplier * est.se_log_or);
    }
    return est;
}

double bias_difference(double or_uncorrected, double or_qba) {
    if (!(or_uncorrected > 0.0 && or_qba > 0.0)) {
        throw Error(ErrorCode::non_positive_input, "bias difference needs positive odds ratios");
    }
    return std::log(or_uncorrected) - std::log(or_qba);
}

double relative_bias(double or_uncorrected, double or_qba) {
    if (!(or_uncorrected > 0.0)) {
        throw Error(ErrorCode::non_positive_input, "relative bias needs a positive uncorrected OR");
    }
    return (or_uncorrected - or_qba) / or_uncorrected * 100.0;
}

double relative_precision(double se_uncorrected, double se_qba) {
    if (!(se_uncorrected > 0.0 && se_qba > 0.0)) {
        throw Error(ErrorCode::non_positive_input, "relative precision needs positive SEs");
    }
    const double w = 1.0 / (se_uncorrected * se_uncorrected);
    const double w_qba = 1.0 / (se_qba * se_qba);
    return (w - w_qba) / w * 100.0;
}

ComparisonMetrics compare(const EffectEstimate& uncorrected, const EffectEstimate& qba) {
    ComparisonMetrics m;
    m.bias_difference = bias_difference(uncorrected.odds_ratio, qba.odds_ratio);
    m.relative_bias_pct = relative_bias(uncorrected.odds_ratio, qba.odds_ratio);
    m.relative_precision_pct = relative_precision(uncorrected.se_log_or, qba.se_log_or);
    return m;
}

double specificity_validity_threshold(double positives, double arm_total) {
    require(arm_total > 0.0 && positives > 0.0 && positives <= arm_total,
            "threshold needs 0 < positives <= arm_total");
    return 1.0 - positives / arm_total;
}

std::string_view to_string(ErrorMode mode) noexcept {
    return mode == ErrorMode::non_differential ? "non_differential" : "differential";
}

std::string_view to_string(Cell cell) noexcept {
    switch (cell) {
    case Cell::A: return "A";
    case Cell::B: return "B";
    case Cell::C: return "C";
    case Cell::D: return "D";
    }
    return "?";
}

std::string_view to_string(InvalidReason reason) noexcept {
    switch (reason) {
    case InvalidReason::negative_cell: return "negative_cell";
    case InvalidReason::cell_exceeds_total: return "cell_exceeds_total";
    case InvalidReason::zero_denominator: return "zero_denominator";
    }
    return "?";
}

std::string_view to_string(VarianceMethod method) noexcept {
    switch (method) {
    case VarianceMethod::woolf_observed: return "woolf_observed";
    case VarianceMethod::woolf_corrected: return "woolf_corrected";
    case VarianceMethod::delta_corrected: return "delta_corrected";
    }
    return "?";
}

VarianceMethod parse_variance_method(std::string_view name) {
    if (name == "woolf_observed") return VarianceMethod::woolf_observed;
    if (name == "woolf_corrected") return VarianceMethod::woolf_corrected;
    if (name == "delta_corrected") return VarianceMethod::delta_corrected;
    throw Error(ErrorCode::invalid_argument, "unknown variance method: " + std::string(name));
}

}  // namespace qba
