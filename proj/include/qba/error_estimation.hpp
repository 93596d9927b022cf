#pragma once

// Confusion matrix from a probabilistic reference standard: each record's
// case probability is split between the positive and negative reference
// columns instead of an adjudicated 0/1 label.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qba/correction.hpp"
#include "qba/sweep.hpp"

namespace qba {

struct EvaluationRecord {
    bool phenotype_positive = false;
    double case_probability = 0.0;
};

struct ConfusionSums {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tn = 0.0;
    std::size_t positives = 0;
    std::size_t negatives = 0;

    void add(const EvaluationRecord& r) noexcept;
    ConfusionSums& operator+=(const ConfusionSums& other) noexcept;
};

struct ErrorEstimates {
    double tp = 0.0;
    double fp = 0.0;
    double fn = 0.0;
    double tn = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double ppv = 0.0;
    double npv = 0.0;

    ArmErrors arm_errors() const noexcept { return {sensitivity, specificity}; }
};

/// Rates from (possibly fractional) confusion counts. Throws
/// Error(empty_class) naming every rate whose denominator is zero.
ErrorEstimates estimates_from_counts(double tp, double fp, double fn, double tn);

/// Fold in fixed 4096-record blocks; block sums combine in block order, so
/// the result is bit-identical for any thread count.
ConfusionSums accumulate(std::span<const EvaluationRecord> records,
                         Execution execution = Execution::parallel, int threads = 0);

ErrorEstimates aggregate_confusion(std::span<const EvaluationRecord> records,
                                   Execution execution = Execution::parallel, int threads = 0);

struct ErrorModelBridge {
    ErrorModel model;
    std::vector<std::string> warnings;
};

/// Non-differential when the comparator is absent, differential otherwise.
/// A classifier with se + sp <= 1 is kept but flagged.
ErrorModelBridge to_error_model(const ErrorEstimates& target,
                                const std::optional<ErrorEstimates>& comparator = std::nullopt);

/// Two-column CSV with a header naming phenotype_positive (0/1) and
/// case_probability (decimal in [0, 1]), in either order.
std::vector<EvaluationRecord> read_records_csv(std::istream& in);

}  // namespace qba
