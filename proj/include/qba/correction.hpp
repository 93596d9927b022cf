#pragma once

// Outcome-misclassification correction of exposure-by-outcome 2x2 tables.
//
//              target (E1)      comparator (E0)
//   O[+]       a                b
//   O[-]       c = n1 - a       d = n0 - b
//   total      n1               n0
//
// Counts are reals throughout; corrected tables are never rounded before
// estimation.

#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace qba {

inline constexpr double kCiMultiplier = 1.96;

struct ObservedTable {
    double a = 0.0;
    double b = 0.0;
    double n_target = 0.0;
    double n_comparator = 0.0;

    /// Validating constructor; throws Error(invalid_argument).
    static ObservedTable make(double a, double b, double n_target, double n_comparator);

    double c() const noexcept { return n_target - a; }
    double d() const noexcept { return n_comparator - b; }

    /// Comparator becomes target and vice versa.
    ObservedTable swapped() const noexcept { return {b, a, n_comparator, n_target}; }

    void validate() const;

    friend bool operator==(const ObservedTable&, const ObservedTable&) = default;
};

struct ArmErrors {
    double sensitivity = 1.0;
    double specificity = 1.0;

    void validate() const;
    /// se + sp - 1; the correction divides by this.
    double youden() const noexcept { return sensitivity - (1.0 - specificity); }

    friend bool operator==(const ArmErrors&, const ArmErrors&) = default;
};

enum class ErrorMode { non_differential, differential };

/// Per-arm phenotype errors. The non-differential factory is the only way to
/// get mode() == non_differential, so both arms are equal in that mode.
class ErrorModel {
public:
    static ErrorModel non_differential(ArmErrors both);
    static ErrorModel differential(ArmErrors target, ArmErrors comparator);

    const ArmErrors& target() const noexcept { return target_; }
    const ArmErrors& comparator() const noexcept { return comparator_; }
    ErrorMode mode() const noexcept { return mode_; }

    ErrorModel swapped() const noexcept;

    friend bool operator==(const ErrorModel&, const ErrorModel&) = default;

private:
    ErrorModel(ArmErrors t, ArmErrors c, ErrorMode m) : target_(t), comparator_(c), mode_(m) {}

    ArmErrors target_;
    ArmErrors comparator_;
    ErrorMode mode_;
};

enum class Cell { A, B, C, D };
enum class InvalidReason { negative_cell, cell_exceeds_total, zero_denominator };

/// Correction of one arm: corrected = numerator / denominator with
/// numerator = x - n(1 - sp) and denominator = se - (1 - sp).
struct ArmCorrection {
    double numerator = 0.0;
    double denominator = 0.0;
    std::optional<double> corrected;        // absent iff denominator == 0
    std::optional<InvalidReason> reason;    // absent iff the arm is in range
    std::vector<Cell> offending;

    bool in_range() const noexcept { return !reason.has_value(); }
};

struct CorrectedTable {
    double A = 0.0;
    double B = 0.0;
    double n_target = 0.0;
    double n_comparator = 0.0;

    double C() const noexcept { return n_target - A; }
    double D() const noexcept { return n_comparator - B; }

    ObservedTable as_table() const noexcept { return {A, B, n_target, n_comparator}; }
};

struct InvalidCorrection {
    ArmCorrection target;
    ArmCorrection comparator;
};

class CorrectionResult {
public:
    CorrectionResult(CorrectedTable t) : value_(t) {}
    CorrectionResult(InvalidCorrection i) : value_(std::move(i)) {}

    bool valid() const noexcept { return std::holds_alternative<CorrectedTable>(value_); }
    const CorrectedTable& table() const { return std::get<CorrectedTable>(value_); }
    const InvalidCorrection& invalid() const { return std::get<InvalidCorrection>(value_); }

private:
    std::variant<CorrectedTable, InvalidCorrection> value_;
};

enum class VarianceMethod { woolf_observed, woolf_corrected, delta_corrected };

struct EffectEstimate {
    double odds_ratio = 1.0;
    double log_or = 0.0;
    double se_log_or = 0.0;
    double ci_lower = 1.0;
    double ci_upper = 1.0;
    VarianceMethod variance_method = VarianceMethod::woolf_observed;
};

struct ComparisonMetrics {
    double bias_difference = 0.0;
    double relative_bias_pct = 0.0;
    std::optional<double> relative_precision_pct;
};

/// Woolf log-OR estimate. Requires all four cells > 0 (Error zero_cell);
/// no continuity correction is applied. delta_corrected is rejected here
/// because it needs the error model (see corrected_estimate).
EffectEstimate odds_ratio_estimate(const ObservedTable& table,
                                   VarianceMethod method = VarianceMethod::woolf_observed);

ArmCorrection correct_arm(double positives, double total, const ArmErrors& errors);

CorrectionResult correct_table(const ObservedTable& observed, const ErrorModel& errors);

/// Forward model: what a classifier with these errors would observe on a
/// table of true counts. Exact inverse of correct_table when se + sp > 1.
ObservedTable misclassify(const ObservedTable& truth, const ErrorModel& errors);

EffectEstimate corrected_estimate(const CorrectedTable& corrected, const ObservedTable& observed,
                                  const ErrorModel& errors,
                                  VarianceMethod method = VarianceMethod::woolf_corrected);

double bias_difference(double or_uncorrected, double or_qba);
double relative_bias(double or_uncorrected, double or_qba);
double relative_precision(double se_uncorrected, double se_qba);

/// Metrics of `qba` against `uncorrected`; relative precision is filled in
/// because both estimates carry a standard error.
ComparisonMetrics compare(const EffectEstimate& uncorrected, const EffectEstimate& qba);

/// Infimum specificity at which an arm with this many positives keeps a
/// non-negative corrected numerator: 1 - positives / total.
double specificity_validity_threshold(double positives, double arm_total);

std::string_view to_string(ErrorMode mode) noexcept;
std::string_view to_string(Cell cell) noexcept;
std::string_view to_string(InvalidReason reason) noexcept;
std::string_view to_string(VarianceMethod method) noexcept;

/// Throws Error(invalid_argument) on unknown names.
VarianceMethod parse_variance_method(std::string_view name);

}  // namespace qba
