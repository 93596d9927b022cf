#include <doctest.h>

#include <cmath>

#include "qba/error.hpp"
#include "qba/report.hpp"
#include "support.hpp"

using namespace qba;
namespace rp = qba::report;

TEST_SUITE("report") {

TEST_CASE("sweep grid CSV round-trips exactly") {
    const SweepSpec s = window_around({1500, 1400, 100000, 100000}, {0.6, 0.99}, 0.02, 7e-4);
    const auto cells = sweep_grid(s);
    const std::string csv = rp::grid_csv(cells);
    CHECK(csv.rfind("sensitivity,specificity,valid,or_qba,se_qba,reason\n", 0) == 0);
    CHECK(rp::parse_grid_csv(csv) == cells);
    CHECK(rp::grid_csv(rp::parse_grid_csv(csv)) == csv);
    CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("frontier CSV round-trips exactly") {
    const SweepSpec s{{40, 100, 100, 1000}, 0.0, 1.0, 0.0, 1.0, 0.01};
    const auto f = sweep_frontier(s);
    const std::string csv = rp::frontier_csv(f);
    CHECK(csv.find("never") != std::string::npos);
    CHECK(rp::parse_frontier_csv(csv).rows == f.rows);
}

TEST_CASE("percentile table CSV") {
    const auto space = full_space();
    const std::string csv = rp::percentiles_csv(space);
    const auto rows = rp::parse_percentiles_csv(csv);
    REQUIRE(rows.size() == 150);
    CHECK(rows[2] == rp::PercentileTableRow{"0.1", "1.001", "50%ile", "1.002", "0.855", "0.6", "0.947368", "-0.001", "-0.11"});
    CHECK(rows[29] == rp::PercentileTableRow{"0.1", "10", "max", "5458.628", "0.2125", "0.2", "0.978947", "-6.302", "-54484.81"});
    CHECK(rows.back().incidence == "0.00001");

    std::vector<rp::PercentileTableRow> again;
    for (const auto& o : space) {
        for (auto& r : rp::percentile_table_rows(*o.result)) again.push_back(r);
    }
    CHECK(again == rows);
}

TEST_CASE("estimable CSV round-trips exactly") {
    const auto curve = estimable_curve(full_space());
    const auto back = rp::parse_estimable_csv(rp::estimable_csv(curve));
    REQUIRE(back.size() == curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(back[i].incidence == curve[i].incidence);
        CHECK(back[i].uncorrected_or == curve[i].uncorrected_or);
        CHECK(back[i].valid_cells == curve[i].valid_cells);
        CHECK(back[i].estimable_proportion == curve[i].estimable_proportion);
    }
}

TEST_CASE("estimates CSV round-trips exactly") {
    const ErrorEstimates e = estimates_from_counts(0.8, 0.2, 0.3, 0.7);
    const ErrorEstimates back = rp::parse_estimates_csv(rp::estimates_csv(e));
    CHECK(back.tp == e.tp);
    CHECK(back.sensitivity == e.sensitivity);
    CHECK(back.npv == e.npv);
    CHECK_THROWS_AS(rp::parse_estimates_csv("tp,fp\n1,2\n"), Error);
}

TEST_CASE("malformed CSV is rejected") {
    CHECK_THROWS_AS(rp::parse_grid_csv("sensitivity,specificity\n"), Error);
    CHECK_THROWS_AS(rp::parse_grid_csv("sensitivity,specificity,valid,or_qba,se_qba,reason\n0.5,0.9,2,,,\n"), Error);
    CHECK_THROWS_AS(rp::parse_frontier_csv("sensitivity,min_specificity,method,monotone\n0.5,x,binary,1\n"), Error);
    CHECK_THROWS_AS(rp::parse_percentiles_csv("nope\n"), Error);
}

TEST_CASE("correct report documents the invalid worked example") {
    rp::CorrectRequest req;
    req.table = {100, 100, 100000, 100000};
    req.errors = ErrorModel::non_differential({0.5, 0.99});
    const auto doc = rp::to_json(rp::run_correct(req));
    CHECK(doc["kind"] == "invalid");
    CHECK(std::fabs(doc["diagnostics"]["A"].get<double>() - -1836.73) < 0.01);
    CHECK(doc["diagnostics"]["target"]["reason"] == "negative_cell");
    CHECK(doc["diagnostics"]["target"]["offending"] == nlohmann::json::array({"A"}));
    CHECK(doc["corrected"].is_null());
    CHECK(doc["estimable"] == false);
    CHECK(doc["observed_estimate"]["odds_ratio"] == 1.0);
}

TEST_CASE("correct report at perfect classification") {
    rp::CorrectRequest req;
    req.table = {30, 20, 1000, 900};
    const auto r = rp::run_correct(req);
    const auto doc = rp::to_json(r);
    CHECK(doc["kind"] == "corrected");
    CHECK(doc["corrected"]["A"] == 30.0);
    CHECK(doc["corrected"]["B"] == 20.0);
    CHECK(doc["metrics"]["bias_difference"] == 0.0);
    CHECK(doc["metrics"]["relative_bias_pct"] == 0.0);
    CHECK(doc["metrics"]["relative_precision_pct"] == 0.0);
    CHECK(rp::to_text(r).find("relative_bias=0.00%") != std::string::npos);

    req.method = VarianceMethod::woolf_observed;
    CHECK_THROWS_AS(rp::run_correct(req), Error);
}

TEST_CASE("zero corrected cells are reported as not estimable") {
    rp::CorrectRequest req;
    req.table = {100, 200, 100000, 100000};
    req.errors = ErrorModel::non_differential({0.5, 0.999});  // A = 0 exactly
    const auto r = rp::run_correct(req);
    CHECK(r.correction.valid());
    CHECK_FALSE(r.estimable());
    CHECK_FALSE(r.warnings.empty());
    CHECK(rp::to_json(r)["metrics"].is_null());
}

TEST_CASE("documents are byte-stable across runs and thread counts") {
    const auto serial = full_space({}, Execution::serial);
    const auto parallel = full_space({}, Execution::parallel, 4);
    CHECK(rp::percentiles_csv(serial) == rp::percentiles_csv(parallel));
    CHECK(rp::dump(rp::contours_json(serial)) == rp::dump(rp::contours_json(parallel)));
    CHECK(rp::estimable_csv(estimable_curve(serial)) == rp::estimable_csv(estimable_curve(parallel)));
    const SpaceAxes axes;
    CHECK(rp::dump(rp::manifest_json(serial, axes, {"a"})) == rp::dump(rp::manifest_json(parallel, axes, {"a"})));
    CHECK(rp::dump(rp::stratum_json(*serial[7].result)) == rp::dump(rp::stratum_json(*parallel[7].result)));
}

}  // TEST_SUITE
