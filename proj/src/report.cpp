#include "qba/report.hpp"

#include <sstream>

#include "qba/error.hpp"
#include "qba/numfmt.hpp"

namespace qba::report {

namespace {

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

// Header check plus split of every data row into exactly `width` fields.
std::vector<std::vector<std::string>> csv_body(const std::vector<std::string>& lines,
                                               std::string_view header) {
    if (lines.empty() || lines.front() != header) {
        throw Error(ErrorCode::parse_error, "expected header '" + std::string(header) + "'");
    }
    const std::size_t width = split_csv_line(header).size();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto views = split_csv_line(lines[i]);
        std::vector<std::string> fields(views.begin(), views.end());
        if (fields.size() != width) {
            throw Error(ErrorCode::parse_error, "row " + std::to_string(i) + " has " +
                                                    std::to_string(fields.size()) + " fields");
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

bool parse_flag(std::string_view s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw Error(ErrorCode::parse_error, "expected 0 or 1, got '" + std::string(s) + "'");
}

std::size_t parse_count(std::string_view s) {
    const double v = parse_double(s);
    if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
        throw Error(ErrorCode::parse_error, "expected a count, got '" + std::string(s) + "'");
    }
    return static_cast<std::size_t>(v);
}

json arm_json(const ArmCorrection& arm) {
    json j;
    j["numerator"] = arm.numerator;
    j["denominator"] = arm.denominator;
    j["corrected"] = arm.corrected ? json(*arm.corrected) : json(nullptr);
    j["reason"] = arm.reason ? json(std::string(to_string(*arm.reason))) : json(nullptr);
    json cells = json::array();
    for (Cell c : arm.offending) cells.push_back(std::string(to_string(c)));
    j["offending"] = cells;
    return j;
}

json arm_errors_json(const ArmErrors& e) {
    return {{"sensitivity", e.sensitivity}, {"specificity", e.specificity}};
}

std::string estimate_line(const EffectEstimate& e) {
    return "OR=" + format_fixed(e.odds_ratio, 3) + " (95% CI " + format_fixed(e.ci_lower, 3) + ", " +
           format_fixed(e.ci_upper, 3) + ")  SE(log OR)=" + format_fixed(e.se_log_or, 4) + " [" +
           std::string(to_string(e.variance_method)) + "]";
}

std::string arm_text(const char* name, const char* cell, const ArmCorrection& arm) {
    std::string s = std::string("  ") + name + ": numerator=" + format_shortest(arm.numerator) +
                    " denominator=" + format_shortest(arm.denominator);
    if (arm.corrected) s += std::string(" ") + cell + "=" + format_fixed(*arm.corrected, 2);
    if (arm.reason) {
        s += " " + std::string(to_string(*arm.reason)) + " (offending";
        for (Cell c : arm.offending) s += " " + std::string(to_string(c));
        s += ")";
    } else {
        s += " ok";
    }
    return s + "\n";
}

}  // namespace

CorrectReport run_correct(const CorrectRequest& request) {
    if (request.method == VarianceMethod::woolf_observed) {
        throw Error(ErrorCode::invalid_argument,
                    "variance_method for a corrected estimate must be woolf_corrected or delta_corrected");
    }
    request.table.validate();
    CorrectReport r{request, std::nullopt, correct_table(request.table, request.errors), std::nullopt,
                    std::nullopt, {}};

    for (const auto& [arm, e] : {std::pair{"target", request.errors.target()},
                                 std::pair{"comparator", request.errors.comparator()}}) {
        if (e.youden() <= 0.0) {
            r.warnings.push_back(std::string("non-informative classifier in ") + arm +
                                 " arm: sensitivity + specificity <= 1");
        }
    }
    try {
        r.observed_estimate = odds_ratio_estimate(request.table);
    } catch (const Error& e) {
        r.warnings.push_back(std::string("observed table: ") + e.what());
    }
    if (r.correction.valid()) {
        try {
            r.corrected_estimate =
                corrected_estimate(r.correction.table(), request.table, request.errors, request.method);
        } catch (const Error& e) {
            r.warnings.push_back(std::string("corrected table: ") + e.what());
        }
    }
    if (r.observed_estimate && r.corrected_estimate) {
        r.metrics = compare(*r.observed_estimate, *r.corrected_estimate);
    }
    return r;
}

json to_json(const ObservedTable& t) {
    return {{"a", t.a},           {"b", t.b}, {"c", t.c()}, {"d", t.d()}, {"n_target", t.n_target},
            {"n_comparator", t.n_comparator}};
}

json to_json(const ErrorModel& e) {
    return {{"mode", std::string(to_string(e.mode()))},
            {"target", arm_errors_json(e.target())},
            {"comparator", arm_errors_json(e.comparator())}};
}

json to_json(const EffectEstimate& e) {
    return {{"odds_ratio", e.odds_ratio},
            {"log_or", e.log_or},
            {"se_log_or", e.se_log_or},
            {"ci_lower", e.ci_lower},
            {"ci_upper", e.ci_upper},
            {"variance_method", std::string(to_string(e.variance_method))}};
}

json to_json(const CorrectReport& r) {
    json j;
    const bool valid = r.correction.valid();
    j["kind"] = valid ? "corrected" : "invalid";
    j["observed"] = to_json(r.request.table);
    j["errors"] = to_json(r.request.errors);
    j["variance_method"] = std::string(to_string(r.request.method));
    j["observed_estimate"] = r.observed_estimate ? to_json(*r.observed_estimate) : json(nullptr);
    if (valid) {
        const CorrectedTable& t = r.correction.table();
        j["corrected"] = {{"A", t.A},    {"B", t.B}, {"C", t.C()}, {"D", t.D()}, {"n_target", t.n_target},
                          {"n_comparator", t.n_comparator}};
        j["diagnostics"] = nullptr;
    } else {
        const InvalidCorrection& inv = r.correction.invalid();
        j["corrected"] = nullptr;
        j["diagnostics"] = {
            {"A", inv.target.corrected ? json(*inv.target.corrected) : json(nullptr)},
            {"B", inv.comparator.corrected ? json(*inv.comparator.corrected) : json(nullptr)},
            {"target", arm_json(inv.target)},
            {"comparator", arm_json(inv.comparator)}};
    }
    j["estimable"] = r.estimable();
    j["corrected_estimate"] = r.corrected_estimate ? to_json(*r.corrected_estimate) : json(nullptr);
    if (r.metrics) {
        j["metrics"] = {{"bias_difference", r.metrics->bias_difference},
                        {"relative_bias_pct", r.metrics->relative_bias_pct},
                        {"relative_precision_pct", r.metrics->relative_precision_pct
                                                       ? json(*r.metrics->relative_precision_pct)
                                                       : json(nullptr)}};
    } else {
        j["metrics"] = nullptr;
    }
    j["warnings"] = r.warnings;
    return j;
}

std::string to_text(const CorrectReport& r) {
    const ObservedTable& t = r.request.table;
    const ErrorModel& e = r.request.errors;
    std::string s;
    s += "observed    a=" + format_shortest(t.a) + " b=" + format_shortest(t.b) +
         " c=" + format_shortest(t.c()) + " d=" + format_shortest(t.d()) + "\n";
    if (r.observed_estimate) s += "            " + estimate_line(*r.observed_estimate) + "\n";
    s += "errors      " + std::string(to_string(e.mode())) + "  target se=" +
         format_shortest(e.target().sensitivity) + " sp=" + format_shortest(e.target().specificity) +
         "  comparator se=" + format_shortest(e.comparator().sensitivity) +
         " sp=" + format_shortest(e.comparator().specificity) + "\n";
    if (r.correction.valid()) {
        const CorrectedTable& c = r.correction.table();
        s += "corrected   A=" + format_fixed(c.A, 4) + " B=" + format_fixed(c.B, 4) +
             " C=" + format_fixed(c.C(), 4) + " D=" + format_fixed(c.D(), 4) + "\n";
    } else {
        s += "invalid correction\n";
        s += arm_text("target", "A", r.correction.invalid().target);
        s += arm_text("comparator", "B", r.correction.invalid().comparator);
    }
    if (r.corrected_estimate) s += "            " + estimate_line(*r.corrected_estimate) + "\n";
    if (r.metrics) {
        s += "metrics     bias_difference=" + format_fixed(r.metrics->bias_difference, 3) +
             " relative_bias=" + format_fixed(r.metrics->relative_bias_pct, 2) + "%";
        if (r.metrics->relative_precision_pct) {
            s += " relative_precision=" + format_fixed(*r.metrics->relative_precision_pct, 2) + "%";
        }
        s += "\n";
    }
    for (const auto& w : r.warnings) s += "warning     " + w + "\n";
    return s;
}

// --- sweep -----------------------------------------------------------------

namespace {
constexpr std::string_view kGridHeader = "sensitivity,specificity,valid,or_qba,se_qba,reason";
constexpr std::string_view kFrontierHeader = "sensitivity,min_specificity,method,monotone";
constexpr std::string_view kPercentilesHeader =
    "incidence,or,distribution_point,or_qba,estimable,sensitivity,specificity,bias_difference,"
    "relative_bias";
constexpr std::string_view kEstimableHeader = "incidence,or,estimable,valid_cells";
constexpr std::string_view kEstimatesHeader = "tp,fp,fn,tn,sensitivity,specificity,ppv,npv";
}  // namespace

std::string grid_csv(const std::vector<SweepCell>& cells) {
    std::string s(kGridHeader);
    s += '\n';
    for (const SweepCell& c : cells) {
        s += format_shortest(c.sensitivity) + ',' + format_shortest(c.specificity) + ',' +
             (c.valid ? "1," : "0,");
        if (c.valid) s += format_shortest(c.or_qba) + ',' + format_shortest(c.se_qba);
        else s += ',';
        s += ',';
        if (c.reason) s += to_string(*c.reason);
        s += '\n';
    }
    return s;
}

std::vector<SweepCell> parse_grid_csv(const std::string& text) {
    std::vector<SweepCell> cells;
    for (const auto& f : csv_body(lines_of(text), kGridHeader)) {
        SweepCell c;
        c.sensitivity = parse_double(f[0]);
        c.specificity = parse_double(f[1]);
        c.valid = parse_flag(f[2]);
        if (c.valid) {
            c.or_qba = parse_double(f[3]);
            c.se_qba = parse_double(f[4]);
        }
        if (!f[5].empty()) c.reason = parse_cell_failure(f[5]);
        cells.push_back(c);
    }
    return cells;
}

std::string frontier_csv(const ValidityFrontier& f) {
    std::string s(kFrontierHeader);
    s += '\n';
    for (const FrontierRow& r : f.rows) {
        s += format_shortest(r.sensitivity) + ',' +
             (r.min_specificity ? format_shortest(*r.min_specificity) : std::string("never")) + ',' +
             std::string(to_string(r.method)) + ',' + (r.monotone ? "1" : "0") + '\n';
    }
    return s;
}

ValidityFrontier parse_frontier_csv(const std::string& text) {
    ValidityFrontier out;
    for (const auto& f : csv_body(lines_of(text), kFrontierHeader)) {
        FrontierRow r;
        r.sensitivity = parse_double(f[0]);
        if (f[1] != "never") r.min_specificity = parse_double(f[1]);
        if (f[2] == "binary") r.method = FrontierMethod::binary;
        else if (f[2] == "linear") r.method = FrontierMethod::linear;
        else throw Error(ErrorCode::parse_error, "unknown frontier method: " + std::string(f[2]));
        r.monotone = parse_flag(f[3]);
        out.rows.push_back(r);
    }
    return out;
}

json to_json(const SweepSpec& spec) {
    return {{"table", to_json(spec.table)}, {"sens_min", spec.sens_min}, {"sens_max", spec.sens_max},
            {"spec_min", spec.spec_min},    {"spec_max", spec.spec_max}, {"step", spec.step},
            {"cells", spec.grid_size()}};
}

json to_json(const std::vector<SweepCell>& cells) {
    json arr = json::array();
    for (const SweepCell& c : cells) {
        json j = {{"sensitivity", c.sensitivity}, {"specificity", c.specificity}, {"valid", c.valid}};
        j["or_qba"] = c.valid ? json(c.or_qba) : json(nullptr);
        j["se_qba"] = c.valid ? json(c.se_qba) : json(nullptr);
        j["reason"] = c.reason ? json(std::string(to_string(*c.reason))) : json(nullptr);
        arr.push_back(std::move(j));
    }
    return arr;
}

json to_json(const ValidityFrontier& f) {
    json rows = json::array();
    for (const FrontierRow& r : f.rows) {
        rows.push_back({{"sensitivity", r.sensitivity},
                        {"min_specificity", r.min_specificity ? json(*r.min_specificity) : json(nullptr)},
                        {"method", std::string(to_string(r.method))},
                        {"monotone", r.monotone}});
    }
    return {{"rows", rows}, {"non_monotone", f.non_monotone_sensitivities()}};
}

// --- synthetic space -------------------------------------------------------

std::vector<PercentileTableRow> percentile_table_rows(const StratumResult& s) {
    std::vector<PercentileTableRow> out;
    for (const PercentileRow& r : s.rows) {
        out.push_back({format_trimmed(s.scenario.incidence, 10),
                       format_trimmed(s.scenario.uncorrected_or, 6),
                       std::string(to_string(r.point)),
                       format_fixed(r.or_qba, 3),
                       format_trimmed(s.estimable_proportion(), 4),
                       format_trimmed(r.sensitivity, 6),
                       format_trimmed(r.specificity, 6),
                       format_fixed(r.bias_difference, 3),
                       format_fixed(r.relative_bias, 2)});
    }
    return out;
}

std::string percentiles_csv(const std::vector<StratumOutcome>& space) {
    std::string s(kPercentilesHeader);
    s += '\n';
    for (const StratumOutcome& o : space) {
        if (!o.ok()) continue;
        for (const PercentileTableRow& r : percentile_table_rows(*o.result)) {
            s += r.incidence + ',' + r.odds_ratio + ',' + r.distribution_point + ',' + r.or_qba + ',' +
                 r.estimable + ',' + r.sensitivity + ',' + r.specificity + ',' + r.bias_difference +
                 ',' + r.relative_bias + '\n';
        }
    }
    return s;
}

std::vector<PercentileTableRow> parse_percentiles_csv(const std::string& text) {
    std::vector<PercentileTableRow> out;
    for (const auto& f : csv_body(lines_of(text), kPercentilesHeader)) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            if (i != 2) parse_double(f[i]);  // numeric fields must be numbers
        }
        parse_distribution_point(f[2]);
        out.push_back({std::string(f[0]), std::string(f[1]), std::string(f[2]), std::string(f[3]),
                       std::string(f[4]), std::string(f[5]), std::string(f[6]), std::string(f[7]),
                       std::string(f[8])});
    }
    return out;
}

std::string estimable_csv(const std::vector<EstimableRow>& rows) {
    std::string s(kEstimableHeader);
    s += '\n';
    for (const EstimableRow& r : rows) {
        s += format_shortest(r.incidence) + ',' + format_shortest(r.uncorrected_or) + ',' +
             format_shortest(r.estimable_proportion) + ',' + std::to_string(r.valid_cells) + '\n';
    }
    return s;
}

std::vector<EstimableRow> parse_estimable_csv(const std::string& text) {
    std::vector<EstimableRow> out;
    for (const auto& f : csv_body(lines_of(text), kEstimableHeader)) {
        out.push_back({parse_double(f[0]), parse_double(f[1]), parse_count(f[3]), parse_double(f[2])});
    }
    return out;
}

json to_json(const PercentileRow& r) {
    return {{"point", std::string(to_string(r.point))},
            {"or_qba", r.or_qba},
            {"sensitivity", r.sensitivity},
            {"specificity", r.specificity},
            {"bias_difference", r.bias_difference},
            {"relative_bias", r.relative_bias}};
}

json to_json(const ContourSet& c) {
    json levels = json::array();
    for (const ContourLevel& l : c.levels) {
        json lines = json::array();
        for (const Polyline& p : l.polylines) {
            json pts = json::array();
            for (const LatticePoint& v : p) pts.push_back({v.sensitivity, v.specificity});
            lines.push_back(std::move(pts));
        }
        levels.push_back({{"point", std::string(to_string(l.point))},
                          {"value", l.value},
                          {"polylines", std::move(lines)}});
    }
    return {{"incidence", c.incidence}, {"or", c.uncorrected_or}, {"levels", std::move(levels)},
            {"min", to_json(c.min)},    {"max", to_json(c.max)}};
}

json stratum_json(const StratumResult& s) {
    json j;
    j["incidence"] = s.scenario.incidence;
    j["or"] = s.scenario.uncorrected_or;
    j["n_per_arm"] = s.scenario.n_per_arm;
    j["counts"] = std::string(to_string(s.scenario.counts));
    j["table"] = to_json(s.table);
    j["realized_or"] = s.realized_or;
    j["axes"] = {{"sensitivities", s.axes.sensitivities}, {"specificities", s.axes.specificities}};
    j["valid_cells"] = s.valid_cells;
    j["estimable"] = s.estimable_proportion();
    json rows = json::array();
    for (const PercentileRow& r : s.rows) rows.push_back(to_json(r));
    j["rows"] = std::move(rows);
    j["cells"] = to_json(s.cells);
    if (s.valid_cells >= 3) {
        j["contours"] = to_json(contour_lines(s));
    } else {
        j["contours"] = nullptr;
    }
    return j;
}

json estimable_json(const std::vector<EstimableRow>& rows) {
    json arr = json::array();
    for (const EstimableRow& r : rows) {
        arr.push_back({{"incidence", r.incidence},
                       {"or", r.uncorrected_or},
                       {"estimable", r.estimable_proportion},
                       {"valid_cells", r.valid_cells}});
    }
    return arr;
}

json contours_json(const std::vector<StratumOutcome>& space) {
    json arr = json::array();
    for (const StratumOutcome& o : space) {
        if (o.ok() && o.result->valid_cells >= 3) arr.push_back(to_json(contour_lines(*o.result)));
    }
    return arr;
}

json manifest_json(const std::vector<StratumOutcome>& space, const SpaceAxes& axes,
                   const std::vector<std::string>& files) {
    json strata = json::array();
    std::size_t corrections = 0;
    std::size_t ok = 0;
    for (const StratumOutcome& o : space) {
        json j = {{"incidence", o.scenario.incidence}, {"or", o.scenario.uncorrected_or}};
        if (o.ok()) {
            ++ok;
            corrections += o.result->cells.size();
            j["status"] = "ok";
            j["valid_cells"] = o.result->valid_cells;
            j["contours"] = o.result->valid_cells >= 3 ? "ok" : std::string(to_string(ErrorCode::too_few_valid_cells));
        } else {
            j["status"] = "error";
            j["error_code"] = o.error_code ? std::string(to_string(*o.error_code)) : "unknown";
            j["error"] = o.error;
        }
        strata.push_back(std::move(j));
    }
    return {{"n_per_arm", axes.n_per_arm},
            {"counts", std::string(to_string(axes.counts))},
            {"incidences", axes.incidences},
            {"odds_ratios", axes.odds_ratios},
            {"strata_total", space.size()},
            {"strata_ok", ok},
            {"corrections", corrections},
            {"strata", std::move(strata)},
            {"files", files}};
}

// --- error estimation ------------------------------------------------------

json to_json(const ErrorEstimates& e) {
    return {{"tp", e.tp},
            {"fp", e.fp},
            {"fn", e.fn},
            {"tn", e.tn},
            {"sensitivity", e.sensitivity},
            {"specificity", e.specificity},
            {"ppv", e.ppv},
            {"npv", e.npv}};
}

std::string estimates_csv(const ErrorEstimates& e) {
    std::string s(kEstimatesHeader);
    s += '\n';
    s += format_shortest(e.tp) + ',' + format_shortest(e.fp) + ',' + format_shortest(e.fn) + ',' +
         format_shortest(e.tn) + ',' + format_shortest(e.sensitivity) + ',' +
         format_shortest(e.specificity) + ',' + format_shortest(e.ppv) + ',' + format_shortest(e.npv) +
         '\n';
    return s;
}

ErrorEstimates parse_estimates_csv(const std::string& text) {
    const auto rows = csv_body(lines_of(text), kEstimatesHeader);
    if (rows.size() != 1) throw Error(ErrorCode::parse_error, "expected exactly one estimates row");
    const auto& f = rows.front();
    return {parse_double(f[0]), parse_double(f[1]), parse_double(f[2]), parse_double(f[3]),
            parse_double(f[4]), parse_double(f[5]), parse_double(f[6]), parse_double(f[7])};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

}  // namespace qba::report
