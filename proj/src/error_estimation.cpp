#include "qba/error_estimation.hpp"

#include <istream>
#include <string>

#include <omp.h>

#include "qba/error.hpp"
#include "qba/numfmt.hpp"

namespace qba {

namespace {

constexpr std::size_t kBlock = 4096;

ConfusionSums fold(std::span<const EvaluationRecord> records) {
    ConfusionSums s;
    for (const auto& r : records) s.add(r);
    return s;
}

}  // namespace

void ConfusionSums::add(const EvaluationRecord& r) noexcept {
    if (r.phenotype_positive) {
        tp += r.case_probability;
        fp += 1.0 - r.case_probability;
        ++positives;
    } else {
        fn += r.case_probability;
        tn += 1.0 - r.case_probability;
        ++negatives;
    }
}

ConfusionSums& ConfusionSums::operator+=(const ConfusionSums& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    positives += o.positives;
    negatives += o.negatives;
    return *this;
}

ErrorEstimates estimates_from_counts(double tp, double fp, double fn, double tn) {
    std::string empty;
    auto check = [&empty](double denom, const char* what) {
        if (!(denom > 0.0)) empty += empty.empty() ? what : std::string(", ") + what;
    };
    check(tp + fn, "sensitivity (tp + fn = 0)");
    check(tn + fp, "specificity (tn + fp = 0)");
    check(tp + fp, "ppv (tp + fp = 0)");
    check(tn + fn, "npv (tn + fn = 0)");
    if (!empty.empty()) throw Error(ErrorCode::empty_class, "undefined rates: " + empty);

    ErrorEstimates e{tp, fp, fn, tn, 0.0, 0.0, 0.0, 0.0};
    e.sensitivity = tp / (tp + fn);
    e.specificity = tn / (tn + fp);
    e.ppv = tp / (tp + fp);
    e.npv = tn / (tn + fn);
    return e;
}

ConfusionSums accumulate(std::span<const EvaluationRecord> records, Execution execution,
                         int threads) {
    const std::size_t blocks = (records.size() + kBlock - 1) / kBlock;
    std::vector<ConfusionSums> partial(blocks);
    const bool parallel = execution == Execution::parallel;
    const int nthreads = threads > 0 ? threads : omp_get_max_threads();
    const auto nblocks = static_cast<std::ptrdiff_t>(blocks);

#pragma omp parallel for schedule(static) if (parallel) num_threads(nthreads)
    for (std::ptrdiff_t i = 0; i < nblocks; ++i) {
        const std::size_t begin = static_cast<std::size_t>(i) * kBlock;
        partial[static_cast<std::size_t>(i)] = fold(records.subspan(begin, std::min(kBlock, records.size() - begin)));
    }

    ConfusionSums total;
    for (const auto& p : partial) total += p;
    return total;
}

ErrorEstimates aggregate_confusion(std::span<const EvaluationRecord> records, Execution execution,
                                   int threads) {
    if (records.empty()) throw Error(ErrorCode::empty_class, "no evaluation records");
    for (const auto& r : records) {
        if (!(r.case_probability >= 0.0 && r.case_probability <= 1.0)) {
            throw Error(ErrorCode::invalid_argument, "case probability outside [0, 1]");
        }
    }
    const ConfusionSums s = accumulate(records, execution, threads);
    if (s.positives == 0 || s.negatives == 0) {
        throw Error(ErrorCode::empty_class, s.positives == 0 ? "no phenotype-positive records"
                                                             : "no phenotype-negative records");
    }
    return estimates_from_counts(s.tp, s.fp, s.fn, s.tn);
}

ErrorModelBridge to_error_model(const ErrorEstimates& target,
                                const std::optional<ErrorEstimates>& comparator) {
    ErrorModelBridge out{comparator ? ErrorModel::differential(target.arm_errors(), comparator->arm_errors())
                                    : ErrorModel::non_differential(target.arm_errors()),
                         {}};
    auto flag = [&out](const ArmErrors& e, const char* arm) {
        if (e.sensitivity + e.specificity <= 1.0) {
            out.warnings.push_back(std::string("non-informative classifier in ") + arm +
                                   " arm: sensitivity + specificity <= 1");
        }
    };
    flag(out.model.target(), "target");
    if (comparator) flag(out.model.comparator(), "comparator");
    return out;
}

std::vector<EvaluationRecord> read_records_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::parse_error, "records CSV is empty");
    const auto header = split_csv_line(line);
    int pos_col = -1;
    int prob_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto name = trim(header[i]);
        if (name == "phenotype_positive") pos_col = static_cast<int>(i);
        if (name == "case_probability") prob_col = static_cast<int>(i);
    }
    if (header.size() != 2 || pos_col < 0 || prob_col < 0) {
        throw Error(ErrorCode::parse_error,
                    "header must name phenotype_positive and case_probability");
    }

    std::vector<EvaluationRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const std::string where = "line " + std::to_string(lineno) + ": ";
        if (fields.size() != 2) throw Error(ErrorCode::parse_error, where + "expected 2 fields");
        const auto flag = trim(fields[static_cast<std::size_t>(pos_col)]);
        if (flag != "0" && flag != "1") {
            throw Error(ErrorCode::parse_error, where + "phenotype_positive must be 0 or 1");
        }
        double p = 0.0;
        try {
            p = parse_double(fields[static_cast<std::size_t>(prob_col)]);
        } catch (const Error& e) {
            throw Error(ErrorCode::parse_error, where + e.what());
        }
        if (!(p >= 0.0 && p <= 1.0)) {
            throw Error(ErrorCode::parse_error, where + "case_probability must lie in [0, 1]");
        }
        records.push_back({flag == "1", p});
    }
    return records;
}

}  // namespace qba
