#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qba/error.hpp"
#include "qba/error_estimation.hpp"
#include "qba/reference.hpp"
#include "support.hpp"
#include "validation_rows.hpp"

using namespace qba;
using qba::testing::Draw;
using qba::testing::rel_err;

namespace {

double round4(double x) { return std::nearbyint(x * 1e4) / 1e4; }

std::vector<EvaluationRecord> random_records(Draw& draw, std::size_t n) {
    std::vector<EvaluationRecord> r(n);
    for (auto& x : r) x = {draw.coin(), draw.uniform(0.0, 1.0)};
    return r;
}

}  // namespace

TEST_SUITE("error_estimation") {

TEST_CASE("two-record example") {
    const std::vector<EvaluationRecord> r{{true, 0.8}, {false, 0.3}};
    const ErrorEstimates e = aggregate_confusion(r);
    CHECK(e.tp == doctest::Approx(0.8));
    CHECK(e.fp == doctest::Approx(0.2));
    CHECK(e.fn == doctest::Approx(0.3));
    CHECK(e.tn == doctest::Approx(0.7));
    CHECK(e.sensitivity == doctest::Approx(0.8 / 1.1));
    CHECK(std::fabs(e.sensitivity - 0.727) < 5e-4);
    CHECK(std::fabs(e.specificity - 0.778) < 5e-4);
    CHECK(e.ppv == doctest::Approx(0.8));
    CHECK(e.npv == doctest::Approx(0.7));
}

TEST_CASE("crisp probabilities give an ordinary confusion matrix") {
    const std::vector<EvaluationRecord> r{{true, 1}, {true, 1}, {true, 0}, {false, 1}, {false, 0}, {false, 0}, {false, 0}};
    const ErrorEstimates e = aggregate_confusion(r);
    CHECK(e.tp == 2);
    CHECK(e.fp == 1);
    CHECK(e.fn == 1);
    CHECK(e.tn == 3);
}

TEST_CASE("published validation rows") {
    for (const auto& row : qba::testing::kValidationRows) {
        CAPTURE(row.database);
        CAPTURE(row.population);
        const ErrorEstimates e = estimates_from_counts(row.tp, row.fp, row.fn, row.tn);
        CHECK(round4(e.sensitivity) == row.sensitivity);
        CHECK(round4(e.specificity) == row.specificity);
        CHECK(round4(e.ppv) == row.ppv);
        CHECK(round4(e.npv) == row.npv);
    }
}

TEST_CASE("undefined rates are named") {
    try {
        estimates_from_counts(0, 5, 0, 5);
        FAIL("expected empty_class");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::empty_class);
        const std::string msg = e.what();
        CHECK(msg.find("sensitivity") != std::string::npos);
        CHECK(msg.find("specificity") == std::string::npos);
        CHECK(msg.find("ppv") == std::string::npos);
    }
    const std::vector<EvaluationRecord> only_positive{{true, 0.4}, {true, 0.9}};
    CHECK_THROWS_AS(aggregate_confusion(only_positive), Error);
    CHECK_THROWS_AS(aggregate_confusion({}), Error);
}

TEST_CASE("error model bridge") {
    const auto& acei = qba::testing::kValidationRows[17];
    const auto& arb = qba::testing::kValidationRows[18];
    const ErrorEstimates t = estimates_from_counts(acei.tp, acei.fp, acei.fn, acei.tn);
    const ErrorEstimates c = estimates_from_counts(arb.tp, arb.fp, arb.fn, arb.tn);

    const auto single = to_error_model(t);
    CHECK(single.model.mode() == ErrorMode::non_differential);
    CHECK(single.model.target() == single.model.comparator());
    CHECK(single.warnings.empty());

    const auto diff = to_error_model(t, c);
    CHECK(diff.model.mode() == ErrorMode::differential);
    CHECK(round4(diff.model.target().sensitivity) == 0.6353);
    CHECK(round4(diff.model.target().specificity) == 0.9879);
    CHECK(round4(diff.model.comparator().sensitivity) == 0.6382);
    CHECK(round4(diff.model.comparator().specificity) == 0.9877);

    const ErrorEstimates poor = estimates_from_counts(1, 6, 4, 4);  // se 0.2, sp 0.4
    const auto flagged = to_error_model(poor);
    REQUIRE(flagged.warnings.size() == 1);
    CHECK(flagged.warnings[0].find("non-informative classifier") != std::string::npos);
}

TEST_CASE("records CSV") {
    std::istringstream in("case_probability,phenotype_positive\n0.8,1\n\n0.3, 0\r\n");
    const auto r = read_records_csv(in);
    REQUIRE(r.size() == 2);
    CHECK(r[0].phenotype_positive);
    CHECK(r[0].case_probability == 0.8);
    CHECK_FALSE(r[1].phenotype_positive);

    for (const char* bad : {"", "phenotype_positive\n1\n", "phenotype_positive,case_probability\n2,0.5\n",
                            "phenotype_positive,case_probability\n1,1.5\n",
                            "phenotype_positive,case_probability\n1,abc\n",
                            "phenotype_positive,case_probability\n1,0.5,3\n"}) {
        std::istringstream s(bad);
        CHECK_THROWS_AS(read_records_csv(s), Error);
    }
}

TEST_CASE("property: counts add up to the record count") {
    Draw draw(101);
    for (int i = 0; i < qba::testing::kCases; ++i) {
        const auto records = random_records(draw, static_cast<std::size_t>(draw.integer(1, 300)));
        const ConfusionSums s = accumulate(records);
        const auto pos = static_cast<std::size_t>(
            std::count_if(records.begin(), records.end(), [](const auto& r) { return r.phenotype_positive; }));
        CHECK(s.positives == pos);
        CHECK(s.negatives == records.size() - pos);
        CHECK(std::fabs(s.tp + s.fp - static_cast<double>(pos)) < 1e-9);
        CHECK(std::fabs(s.tp + s.fp + s.fn + s.tn - static_cast<double>(records.size())) < 1e-9);
    }
}

TEST_CASE("property: aggregation is additive over partitions and order-free") {
    Draw draw(202);
    for (int i = 0; i < qba::testing::kCases; ++i) {
        auto records = random_records(draw, static_cast<std::size_t>(draw.integer(2, 400)));
        const ConfusionSums whole = reference::confusion(records);

        const auto cut = static_cast<std::size_t>(draw.integer(0, static_cast<int>(records.size())));
        ConfusionSums parts = reference::confusion(std::span(records).first(cut));
        parts += reference::confusion(std::span(records).subspan(cut));
        CHECK(parts.positives == whole.positives);
        CHECK(parts.negatives == whole.negatives);
        CHECK(std::fabs(parts.tp - whole.tp) < 1e-9);
        CHECK(std::fabs(parts.fp - whole.fp) < 1e-9);
        CHECK(std::fabs(parts.fn - whole.fn) < 1e-9);
        CHECK(std::fabs(parts.tn - whole.tn) < 1e-9);

        std::shuffle(records.begin(), records.end(), draw.engine());
        const ConfusionSums shuffled = accumulate(records);
        CHECK(std::fabs(shuffled.tp - whole.tp) < 1e-9);
        CHECK(std::fabs(shuffled.tn - whole.tn) < 1e-9);
    }
}

TEST_CASE("blocked parallel fold is bit-identical for any thread count") {
    Draw draw(303);
    const auto records = random_records(draw, 100'003);
    const ConfusionSums serial = accumulate(records, Execution::serial);
    for (int threads : {1, 2, 5, 16}) {
        const ConfusionSums p = accumulate(records, Execution::parallel, threads);
        CHECK(p.tp == serial.tp);
        CHECK(p.fp == serial.fp);
        CHECK(p.fn == serial.fn);
        CHECK(p.tn == serial.tn);
    }
    const ConfusionSums plain = reference::confusion(records);
    CHECK(rel_err(serial.tp, plain.tp) < 1e-12);
}

TEST_CASE("uninformative reference splits every record in half") {
    std::vector<EvaluationRecord> r;
    for (int i = 0; i < 30; ++i) r.push_back({i % 3 == 0, 0.5});
    const ConfusionSums s = accumulate(r);
    CHECK(s.tp == 0.5 * static_cast<double>(s.positives));
    CHECK(s.fn == 0.5 * static_cast<double>(s.negatives));
    CHECK(s.tp == s.fp);
    CHECK(s.fn == s.tn);
}

}  // TEST_SUITE
