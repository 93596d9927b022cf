#pragma once

// Report documents shared by the CLI and the HTTP service. Both front ends
// serialize through these functions, so their numeric output is identical.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qba/contour.hpp"
#include "qba/correction.hpp"
#include "qba/error_estimation.hpp"
#include "qba/sweep.hpp"
#include "qba/synthspace.hpp"

namespace qba::report {

using nlohmann::json;

struct CorrectRequest {
    ObservedTable table;
    ErrorModel errors = ErrorModel::non_differential({1.0, 1.0});
    VarianceMethod method = VarianceMethod::woolf_corrected;
};

struct CorrectReport {
    CorrectRequest request;
    std::optional<EffectEstimate> observed_estimate;
    CorrectionResult correction;
    std::optional<EffectEstimate> corrected_estimate;
    std::optional<ComparisonMetrics> metrics;
    std::vector<std::string> warnings;

    bool estimable() const noexcept { return corrected_estimate.has_value(); }
};

/// Throws Error(invalid_argument) for woolf_observed, which only applies to
/// the uncorrected table.
CorrectReport run_correct(const CorrectRequest& request);

json to_json(const ObservedTable& t);
json to_json(const ErrorModel& e);
json to_json(const EffectEstimate& e);
json to_json(const CorrectReport& r);

/// Plain-text summary for terminals.
std::string to_text(const CorrectReport& r);

// --- sweep -----------------------------------------------------------------

std::string grid_csv(const std::vector<SweepCell>& cells);
std::vector<SweepCell> parse_grid_csv(const std::string& text);
std::string frontier_csv(const ValidityFrontier& f);
ValidityFrontier parse_frontier_csv(const std::string& text);

json to_json(const SweepSpec& spec);
json to_json(const std::vector<SweepCell>& cells);
json to_json(const ValidityFrontier& f);

// --- synthetic space -------------------------------------------------------

/// One printed row of the percentile table, as text fields.
struct PercentileTableRow {
    std::string incidence;
    std::string odds_ratio;
    std::string distribution_point;
    std::string or_qba;
    std::string estimable;
    std::string sensitivity;
    std::string specificity;
    std::string bias_difference;
    std::string relative_bias;

    friend bool operator==(const PercentileTableRow&, const PercentileTableRow&) = default;
};

std::vector<PercentileTableRow> percentile_table_rows(const StratumResult& s);
std::string percentiles_csv(const std::vector<StratumOutcome>& space);
std::vector<PercentileTableRow> parse_percentiles_csv(const std::string& text);

std::string estimable_csv(const std::vector<EstimableRow>& rows);
std::vector<EstimableRow> parse_estimable_csv(const std::string& text);

json to_json(const PercentileRow& r);
json to_json(const ContourSet& c);
/// Stratum with its cells, percentile rows and, when defined, contours.
json stratum_json(const StratumResult& s);
json estimable_json(const std::vector<EstimableRow>& rows);

/// Contour documents for every stratum that supports them.
json contours_json(const std::vector<StratumOutcome>& space);
json manifest_json(const std::vector<StratumOutcome>& space, const SpaceAxes& axes,
                   const std::vector<std::string>& files);

// --- error estimation ------------------------------------------------------

json to_json(const ErrorEstimates& e);
std::string estimates_csv(const ErrorEstimates& e);
ErrorEstimates parse_estimates_csv(const std::string& text);

/// Two-space indented JSON followed by a newline.
std::string dump(const json& doc);

}  // namespace qba::report
