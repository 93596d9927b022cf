#include "qba/synthspace.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace qba {

namespace {

bool strictly_inside(double b, double s, double n) {
    const double a = s - b;
    return b > 0.0 && b < n && a > 0.0 && a < n;
}

double percentile_p(DistributionPoint p) {
    switch (p) {
    case DistributionPoint::p25: return 0.25;
    case DistributionPoint::p50: return 0.50;
    case DistributionPoint::p75: return 0.75;
    default: return 0.0;
    }
}

}  // namespace

void ScenarioSpec::validate() const {
    if (!(std::isfinite(incidence) && incidence > 0.0 && incidence < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "incidence must lie in (0, 1)");
    }
    if (!(std::isfinite(uncorrected_or) && uncorrected_or > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "uncorrected OR must be positive");
    }
    if (!(std::isfinite(n_per_arm) && n_per_arm > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "n_per_arm must be positive");
    }
    if (incidence * 2.0 * n_per_arm < 1.0) {
        throw Error(ErrorCode::invalid_argument,
                    "incidence * 2 * n_per_arm must be at least one expected event");
    }
}

double round_half_even(double x) noexcept {
    const double lower = std::floor(x);
    const double frac = x - lower;
    if (frac < 0.5) return lower;
    if (frac > 0.5) return lower + 1.0;
    return std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
}

// With s = a + b, c = n - a, d = n - b, the condition ad = OR * bc is
//   (1 - OR) b^2 - (s + n + OR (n - s)) b + s n = 0.
ObservedTable solve_pooled_table(double incidence, double odds_ratio, double n_per_arm) {
    const double s = incidence * 2.0 * n_per_arm;
    const double n = n_per_arm;
    const double alpha = 1.0 - odds_ratio;
    const double beta = -(s + n + odds_ratio * (n - s));
    const double gamma = s * n;
    const double disc = beta * beta - 4.0 * alpha * gamma;
    if (disc < 0.0) throw Error(ErrorCode::no_feasible_table, "no real root for this stratum");

    // Cancellation-free pair of roots; gamma / q also covers alpha == 0.
    const double q = -0.5 * (beta + std::copysign(std::sqrt(disc), beta));
    std::vector<double> roots{gamma / q};
    if (alpha != 0.0) roots.push_back(q / alpha);
    for (double b : roots) {
        if (strictly_inside(b, s, n)) return {s - b, b, n, n};
    }
    throw Error(ErrorCode::no_feasible_table, "no root with 0 < a, b < n_per_arm");
}

ObservedTable build_synthetic_table(const ScenarioSpec& spec) {
    spec.validate();
    ObservedTable t = solve_pooled_table(spec.incidence, spec.uncorrected_or, spec.n_per_arm);
    if (spec.counts == CountMode::whole) {
        t.a = round_half_even(t.a);
        t.b = round_half_even(t.b);
        if (!(t.a > 0.0 && t.b > 0.0 && t.c() > 0.0 && t.d() > 0.0)) {
            throw Error(ErrorCode::no_feasible_table, "whole-count table has an empty cell");
        }
    }
    return t;
}

GridAxes GridAxes::for_incidence(double incidence) {
    GridAxes g;
    g.sensitivities.reserve(kAxisPoints);
    g.specificities.reserve(kAxisPoints);
    const double step = incidence / static_cast<double>(kAxisPoints - 1);
    for (std::size_t j = 1; j <= kAxisPoints; ++j) {
        g.sensitivities.push_back(static_cast<double>(j) / static_cast<double>(kAxisPoints));
    }
    for (std::size_t k = 0; k + 1 < kAxisPoints; ++k) {
        g.specificities.push_back((1.0 - incidence) + static_cast<double>(k) * step);
    }
    g.specificities.push_back(1.0);
    return g;
}

const PercentileRow& StratumResult::row(DistributionPoint p) const {
    for (const auto& r : rows) {
        if (r.point == p) return r;
    }
    throw Error(ErrorCode::invalid_argument, "stratum has no valid cells");
}

std::size_t percentile_rank(double p, std::size_t m) {
    const double r = round_half_even(p * static_cast<double>(m));
    return std::max<std::size_t>(1, static_cast<std::size_t>(r));
}

StratumResult sweep_stratum(const ScenarioSpec& spec) {
    StratumResult out;
    out.scenario = spec;
    out.table = build_synthetic_table(spec);
    out.realized_or = odds_ratio_estimate(out.table).odds_ratio;
    out.axes = GridAxes::for_incidence(spec.incidence);

    out.cells.reserve(kAxisPoints * kAxisPoints);
    for (double se : out.axes.sensitivities) {
        for (double sp : out.axes.specificities) {
            out.cells.push_back(evaluate_cell(out.table, se, sp));
        }
    }

    std::vector<std::size_t> order;
    std::optional<std::size_t> perfect;
    for (std::size_t i = 0; i < out.cells.size(); ++i) {
        const SweepCell& c = out.cells[i];
        if (!c.valid) continue;
        order.push_back(i);
        if (c.sensitivity == 1.0 && c.specificity == 1.0) perfect = i;
    }
    out.valid_cells = order.size();
    if (order.empty()) return out;

    // Ascending OR; ties go to higher specificity, then higher sensitivity.
    std::sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        const SweepCell& x = out.cells[l];
        const SweepCell& y = out.cells[r];
        if (x.or_qba != y.or_qba) return x.or_qba < y.or_qba;
        if (x.specificity != y.specificity) return x.specificity > y.specificity;
        return x.sensitivity > y.sensitivity;
    });

    const std::size_t m = order.size();
    for (DistributionPoint p : kDistributionPoints) {
        std::size_t idx = 0;
        switch (p) {
        case DistributionPoint::min: idx = perfect.value_or(order.front()); break;
        case DistributionPoint::max: idx = order.back(); break;
        default: idx = order[percentile_rank(percentile_p(p), m) - 1]; break;
        }
        const SweepCell& c = out.cells[idx];
        out.rows.push_back({p, c.or_qba, c.sensitivity, c.specificity,
                            bias_difference(out.realized_or, c.or_qba),
                            relative_bias(out.realized_or, c.or_qba), idx});
    }
    return out;
}

std::vector<StratumOutcome> full_space(const SpaceAxes& axes, Execution execution, int threads) {
    if (axes.incidences.empty() || axes.odds_ratios.empty()) {
        throw Error(ErrorCode::invalid_argument, "space axes must be non-empty");
    }
    std::vector<double> ips = axes.incidences;
    std::vector<double> ors = axes.odds_ratios;
    std::sort(ips.begin(), ips.end(), std::greater<>());
    std::sort(ors.begin(), ors.end());

    std::vector<StratumOutcome> space;
    for (double ip : ips) {
        for (double o : ors) {
            space.push_back({ScenarioSpec{ip, o, axes.n_per_arm, axes.counts}, {}, {}, {}});
        }
    }

    const auto count = static_cast<std::ptrdiff_t>(space.size());
    const bool parallel = execution == Execution::parallel;
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) if (parallel) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        StratumOutcome& s = space[static_cast<std::size_t>(i)];
        try {
            s.result = sweep_stratum(s.scenario);
        } catch (const Error& e) {
            s.error_code = e.code();
            s.error = e.what();
        }
    }
    return space;
}

std::vector<EstimableRow> estimable_curve(const std::vector<StratumOutcome>& space) {
    std::vector<EstimableRow> rows;
    for (const auto& s : space) {
        if (!s.ok()) continue;
        rows.push_back({s.scenario.incidence, s.scenario.uncorrected_or, s.result->valid_cells,
                        s.result->estimable_proportion()});
    }
    return rows;
}

std::string_view to_string(DistributionPoint p) noexcept {
    switch (p) {
    case DistributionPoint::min: return "min";
    case DistributionPoint::p25: return "25%ile";
    case DistributionPoint::p50: return "50%ile";
    case DistributionPoint::p75: return "75%ile";
    case DistributionPoint::max: return "max";
    }
    return "?";
}

std::string_view to_string(CountMode m) noexcept { return m == CountMode::whole ? "whole" : "expected"; }

DistributionPoint parse_distribution_point(std::string_view name) {
    for (DistributionPoint p : kDistributionPoints) {
        if (to_string(p) == name) return p;
    }
    throw Error(ErrorCode::parse_error, "unknown distribution point: " + std::string(name));
}

CountMode parse_count_mode(std::string_view name) {
    if (name == "whole") return CountMode::whole;
    if (name == "expected") return CountMode::expected;
    throw Error(ErrorCode::invalid_argument, "unknown count mode: " + std::string(name));
}

}  // namespace qba
