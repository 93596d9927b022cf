// qba: command-line front end for correction, sweeps, the synthetic space,
// error estimation and the HTTP service.
//
// Exit codes: 0 success, 1 usage or I/O error, 2 mathematically invalid (or
// non-estimable) correction.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "qba/error.hpp"
#include "qba/error_estimation.hpp"
#include "qba/numfmt.hpp"
#include "qba/report.hpp"
#include "qba/service.hpp"
#include "qba/sweep.hpp"
#include "qba/synthspace.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kInvalid = 2;

struct Globals {
    std::string format;
    std::string out = "-";
    int threads = 0;
    std::uint64_t seed = 0;  // reserved: nothing in the pipeline is random
};

struct TableArgs {
    double a = 0, b = 0, n1 = 0, n0 = 0;

    void add(CLI::App* cmd) {
        cmd->add_option("--a", a, "Outcome-positive count, target arm")->required();
        cmd->add_option("--b", b, "Outcome-positive count, comparator arm")->required();
        cmd->add_option("--n1", n1, "Target arm total")->required();
        cmd->add_option("--n0", n0, "Comparator arm total")->required();
    }
    qba::ObservedTable table() const { return qba::ObservedTable::make(a, b, n1, n0); }
};

void emit(const Globals& g, const std::string& text) {
    if (g.out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw qba::Error(qba::ErrorCode::invalid_argument, "cannot write " + g.out);
    f << text;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw qba::Error(qba::ErrorCode::invalid_argument, "cannot write " + p.string());
    f << text;
}

std::string require_format(const Globals& g, std::initializer_list<const char*> allowed) {
    const std::string f = g.format.empty() ? *allowed.begin() : g.format;
    for (const char* a : allowed) {
        if (f == a) return f;
    }
    throw CLI::ValidationError("--format", "unsupported format '" + f + "' for this command");
}

// --- correct ---------------------------------------------------------------

struct CorrectArgs {
    TableArgs table;
    std::optional<double> sens, spec, sens_t, spec_t, sens_c, spec_c;
    std::string method = "woolf_corrected";
};

int run_correct(const Globals& g, const CorrectArgs& args) {
    const std::string format = require_format(g, {"text", "json"});
    qba::report::CorrectRequest req;
    req.table = args.table.table();
    const bool differential = args.sens_t || args.spec_t || args.sens_c || args.spec_c;
    if (differential) {
        if (!(args.sens_t && args.spec_t && args.sens_c && args.spec_c)) {
            throw CLI::ValidationError("differential errors need --sens-t, --spec-t, --sens-c and --spec-c");
        }
        if (args.sens || args.spec) {
            throw CLI::ValidationError("--sens/--spec cannot be combined with per-arm errors");
        }
        req.errors = qba::ErrorModel::differential({*args.sens_t, *args.spec_t}, {*args.sens_c, *args.spec_c});
    } else {
        if (!(args.sens && args.spec)) throw CLI::ValidationError("--sens and --spec are required");
        req.errors = qba::ErrorModel::non_differential({*args.sens, *args.spec});
    }
    req.method = qba::parse_variance_method(args.method);

    const qba::report::CorrectReport r = qba::report::run_correct(req);
    emit(g, format == "json" ? qba::report::dump(qba::report::to_json(r)) : qba::report::to_text(r));

    if (!r.correction.valid()) {
        const auto& inv = r.correction.invalid();
        std::string msg = "invalid correction:";
        for (const auto& [name, arm] : {std::pair{"A", &inv.target}, std::pair{"B", &inv.comparator}}) {
            if (arm->in_range()) continue;
            msg += std::string(" ") + name + "=" +
                   (arm->corrected ? qba::format_fixed(*arm->corrected, 2) : std::string("undefined")) +
                   " (" + std::string(qba::to_string(*arm->reason)) + ")";
        }
        std::cerr << msg << "\n";
        return kInvalid;
    }
    if (!r.estimable()) {
        std::cerr << "corrected table is not estimable\n";
        for (const auto& w : r.warnings) std::cerr << "  " << w << "\n";
        return kInvalid;
    }
    return 0;
}

// --- sweep -----------------------------------------------------------------

struct SweepArgs {
    TableArgs table;
    std::optional<double> sens, spec;
    double half_width = 0.05;
    bool full_square = false;
    std::optional<double> sens_min, sens_max, spec_min, spec_max;
    double step = 1e-4;
    bool grid = false;
    bool frontier = false;
    std::size_t cap = 10'000'000;
};

int run_sweep_cmd(const Globals& g, const SweepArgs& a) {
    const std::string format = require_format(g, {"csv", "json"});
    if (a.grid && a.frontier) throw CLI::ValidationError("--grid and --frontier are exclusive");
    const qba::ObservedTable table = a.table.table();

    qba::SweepSpec spec;
    if (a.full_square) {
        spec = {table, 0.0, 1.0, 0.0, 1.0, a.step};
    } else if (a.sens && a.spec) {
        spec = qba::window_around(table, {*a.sens, *a.spec}, a.half_width, a.step);
    } else if (a.sens_min || a.sens_max || a.spec_min || a.spec_max) {
        spec = {table, 0.0, 1.0, 0.0, 1.0, a.step};
    } else {
        throw CLI::ValidationError("give --sens/--spec for a window, explicit bounds, or --full-square");
    }
    // Explicit bounds narrow whatever window was chosen.
    if (a.sens_min) spec.sens_min = *a.sens_min;
    if (a.sens_max) spec.sens_max = *a.sens_max;
    if (a.spec_min) spec.spec_min = *a.spec_min;
    if (a.spec_max) spec.spec_max = *a.spec_max;

    qba::SweepOptions opts;
    opts.cell_cap = a.cap;
    opts.threads = g.threads;
    const auto out = qba::run_sweep(spec, a.grid ? qba::SweepEmit::full_grid : qba::SweepEmit::frontier_only, opts);
    if (const auto* cells = std::get_if<std::vector<qba::SweepCell>>(&out)) {
        emit(g, format == "csv" ? qba::report::grid_csv(*cells)
                                : qba::report::dump({{"spec", qba::report::to_json(spec)},
                                                     {"cells", qba::report::to_json(*cells)}}));
    } else {
        const auto& f = std::get<qba::ValidityFrontier>(out);
        emit(g, format == "csv" ? qba::report::frontier_csv(f)
                                : qba::report::dump({{"spec", qba::report::to_json(spec)},
                                                     {"frontier", qba::report::to_json(f)}}));
        if (const auto bad = f.non_monotone_sensitivities(); !bad.empty()) {
            std::cerr << "warning: validity is not monotone in specificity at " << bad.size()
                      << " sensitivity value(s)\n";
        }
    }
    return 0;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
    std::vector<double> ips;
    std::vector<double> ors;
    double n = 1'000'000.0;
    bool expected_counts = false;
};

int run_synth(const Globals& g, const SynthArgs& a) {
    qba::SpaceAxes axes;
    if (!a.ips.empty()) axes.incidences = a.ips;
    if (!a.ors.empty()) axes.odds_ratios = a.ors;
    axes.n_per_arm = a.n;
    axes.counts = a.expected_counts ? qba::CountMode::expected : qba::CountMode::whole;

    const auto space = qba::full_space(axes, qba::Execution::parallel, g.threads);
    const std::filesystem::path dir = g.out == "-" ? std::filesystem::path(".") : std::filesystem::path(g.out);
    std::filesystem::create_directories(dir);

    const std::vector<std::string> files{"percentiles.csv", "contours.json", "estimable.csv", "manifest.json"};
    write_file(dir / files[0], qba::report::percentiles_csv(space));
    write_file(dir / files[1], qba::report::dump(qba::report::contours_json(space)));
    write_file(dir / files[2], qba::report::estimable_csv(qba::estimable_curve(space)));
    write_file(dir / files[3], qba::report::dump(qba::report::manifest_json(space, axes, files)));

    std::size_t ok = 0;
    std::size_t corrections = 0;
    for (const auto& s : space) {
        if (s.ok()) {
            ++ok;
            corrections += s.result->cells.size();
        } else {
            std::cerr << "stratum ip=" << qba::format_shortest(s.scenario.incidence)
                      << " or=" << qba::format_shortest(s.scenario.uncorrected_or) << " failed: " << s.error
                      << "\n";
        }
    }
    std::cout << space.size() << " strata, " << ok << " ok, " << corrections << " corrections; wrote "
              << (dir / files[0]).string() << ", " << files[1] << ", " << files[2] << ", " << files[3]
              << "\n";
    return ok > 0 ? 0 : kUsage;
}

// --- estimate-errors -------------------------------------------------------

std::vector<qba::EvaluationRecord> load_records(const std::string& path) {
    if (path == "-") return qba::read_records_csv(std::cin);
    std::ifstream f(path);
    if (!f) throw qba::Error(qba::ErrorCode::invalid_argument, "cannot read " + path);
    return qba::read_records_csv(f);
}

std::string estimates_text(const char* label, const qba::ErrorEstimates& e) {
    using qba::format_fixed;
    return std::string(label) + "tp=" + format_fixed(e.tp, 4) + " fp=" + format_fixed(e.fp, 4) +
           " fn=" + format_fixed(e.fn, 4) + " tn=" + format_fixed(e.tn, 4) + "\n" + label +
           "sensitivity=" + format_fixed(e.sensitivity, 4) + " specificity=" + format_fixed(e.specificity, 4) +
           " ppv=" + format_fixed(e.ppv, 4) + " npv=" + format_fixed(e.npv, 4) + "\n";
}

int run_estimate(const Globals& g, const std::string& records, const std::string& comparator) {
    const std::string format = require_format(g, {"text", "json", "csv"});
    const auto target_records = load_records(records);
    const qba::ErrorEstimates target =
        qba::aggregate_confusion(target_records, qba::Execution::parallel, g.threads);
    std::optional<qba::ErrorEstimates> comp;
    if (!comparator.empty()) {
        const auto comp_records = load_records(comparator);
        comp = qba::aggregate_confusion(comp_records, qba::Execution::parallel, g.threads);
    }
    const qba::ErrorModelBridge bridge = qba::to_error_model(target, comp);

    if (format == "csv") {
        if (comp) throw CLI::ValidationError("--format csv holds one estimate; use json for two arms");
        emit(g, qba::report::estimates_csv(target));
    } else if (format == "json") {
        nlohmann::json doc = {{"target", qba::report::to_json(target)},
                              {"comparator", comp ? qba::report::to_json(*comp) : nlohmann::json(nullptr)},
                              {"error_model", qba::report::to_json(bridge.model)},
                              {"warnings", bridge.warnings}};
        emit(g, qba::report::dump(doc));
    } else {
        std::string text = estimates_text(comp ? "target      " : "", target);
        if (comp) text += estimates_text("comparator  ", *comp);
        text += "error model " + std::string(qba::to_string(bridge.model.mode())) + "\n";
        emit(g, text);
    }
    for (const auto& w : bridge.warnings) std::cerr << "warning: " << w << "\n";
    return 0;
}

// --- serve -----------------------------------------------------------------

int run_serve(const Globals& g, std::optional<std::string> host, std::optional<int> port,
              const std::string& cors) {
    // Flags win over the environment, which wins over the defaults.
    if (!host) host = std::getenv("QBA_HOST") ? std::getenv("QBA_HOST") : "127.0.0.1";
    if (!port) {
        const char* env = std::getenv("QBA_PORT");
        port = env ? static_cast<int>(qba::parse_double(env)) : 8080;
    }
    qba::service::ServiceConfig cfg;
    cfg.cors_origin = cors;
    cfg.threads = g.threads;
    qba::service::Server server(cfg);
    const int bound = server.bind(*host, *port);
    if (bound < 0) {
        std::cerr << "cannot bind " << *host << ":" << *port << "\n";
        return kUsage;
    }
    std::cout << "listening on http://" << *host << ":" << bound << std::endl;
    return server.listen() ? 0 : kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Outcome-misclassification bias analysis for 2x2 tables"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--format", g.format, "Output format: text, json or csv (command dependent)");
    app.add_option("--out", g.out, "Output file, or directory for synth ('-' is stdout)");
    app.add_option("--threads", g.threads, "Worker thread cap (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--seed", g.seed, "Reserved; every computation is deterministic");

    CorrectArgs ca;
    auto* correct = app.add_subcommand("correct", "Correct one observed table");
    ca.table.add(correct);
    correct->add_option("--sens", ca.sens, "Sensitivity, both arms");
    correct->add_option("--spec", ca.spec, "Specificity, both arms");
    correct->add_option("--sens-t", ca.sens_t, "Sensitivity, target arm");
    correct->add_option("--spec-t", ca.spec_t, "Specificity, target arm");
    correct->add_option("--sens-c", ca.sens_c, "Sensitivity, comparator arm");
    correct->add_option("--spec-c", ca.spec_c, "Specificity, comparator arm");
    correct->add_option("--variance-method", ca.method, "woolf_corrected or delta_corrected");

    SweepArgs sa;
    auto* sweep = app.add_subcommand("sweep", "Non-differential sweep over a sensitivity x specificity window");
    sa.table.add(sweep);
    sweep->add_option("--sens", sa.sens, "Window centre sensitivity");
    sweep->add_option("--spec", sa.spec, "Window centre specificity");
    sweep->add_option("--half-width", sa.half_width, "Window half width")->capture_default_str();
    sweep->add_flag("--full-square", sa.full_square, "Sweep the whole unit square");
    sweep->add_option("--sens-min", sa.sens_min);
    sweep->add_option("--sens-max", sa.sens_max);
    sweep->add_option("--spec-min", sa.spec_min);
    sweep->add_option("--spec-max", sa.spec_max);
    sweep->add_option("--step", sa.step, "Axis step")->capture_default_str();
    sweep->add_flag("--grid", sa.grid, "Emit every cell");
    sweep->add_flag("--frontier", sa.frontier, "Emit the validity frontier (default)");
    sweep->add_option("--cap", sa.cap, "Maximum cells for --grid")->capture_default_str();

    SynthArgs ya;
    auto* synth = app.add_subcommand("synth", "Evaluate the synthetic grid space");
    synth->add_option("--ip", ya.ips, "Incidence proportion (repeatable)");
    synth->add_option("--or", ya.ors, "Uncorrected odds ratio (repeatable)");
    synth->add_option("--n", ya.n, "Exposures per arm")->capture_default_str();
    synth->add_flag("--expected-counts", ya.expected_counts, "Keep real-valued expected counts");

    std::string records;
    std::string comparator_records;
    auto* estimate = app.add_subcommand("estimate-errors", "Confusion matrix from case probabilities");
    estimate->add_option("--records", records, "CSV with phenotype_positive,case_probability ('-' = stdin)")
        ->required();
    estimate->add_option("--comparator-records", comparator_records, "Second CSV for a differential model");

    std::optional<std::string> host;
    std::optional<int> port;
    std::string cors = "*";
    auto* serve = app.add_subcommand("serve", "Run the HTTP JSON service");
    serve->add_option("--host", host, "Bind address (env QBA_HOST, default 127.0.0.1)");
    serve->add_option("--port", port, "Port, 0 for ephemeral (env QBA_PORT, default 8080)");
    serve->add_option("--cors-origin", cors, "Access-Control-Allow-Origin value")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    if (g.threads > 0) omp_set_num_threads(g.threads);
    try {
        if (*correct) return run_correct(g, ca);
        if (*sweep) return run_sweep_cmd(g, sa);
        if (*synth) return run_synth(g, ya);
        if (*estimate) return run_estimate(g, records, comparator_records);
        if (*serve) return run_serve(g, host, port, cors);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const qba::Error& e) {
        std::cerr << "error (" << qba::to_string(e.code()) << "): " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
