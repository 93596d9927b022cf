#include "qba/service.hpp"

#include <array>
#include <cstdio>
#include <functional>

#include <httplib.h>
#include <json.hpp>

#include "qba/error.hpp"
#include "qba/numfmt.hpp"
#include "qba/report.hpp"
#include "qba/sweep.hpp"
#include "qba/synthspace.hpp"

namespace qba::service {

namespace {

using nlohmann::json;

// An error tied to a request status, with optional structured detail.
struct HttpError {
    int status;
    std::string code;
    std::string message;
    json diagnostics = nullptr;
};

HttpError field_error(const std::string& field, const std::string& message) {
    return {422, std::string(to_string(ErrorCode::invalid_argument)), field + ": " + message,
            {{"field", field}}};
}

const json& member(const json& obj, const std::string& path, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw field_error(path + key, "required");
    return obj.at(key);
}

double number(const json& obj, const std::string& path, const char* key,
              std::optional<double> fallback = std::nullopt) {
    if (obj.is_object() && !obj.contains(key) && fallback) return *fallback;
    const json& v = member(obj, path, key);
    if (!v.is_number()) throw field_error(path + key, "must be a number");
    return v.get<double>();
}

ArmErrors arm_errors(const json& obj, const std::string& path) {
    if (!obj.is_object()) throw field_error(path.substr(0, path.size() - 1), "must be an object");
    ArmErrors e{number(obj, path, "sensitivity"), number(obj, path, "specificity")};
    if (!(e.sensitivity >= 0.0 && e.sensitivity <= 1.0)) {
        throw field_error(path + "sensitivity", "must lie in [0, 1]");
    }
    if (!(e.specificity >= 0.0 && e.specificity <= 1.0)) {
        throw field_error(path + "specificity", "must lie in [0, 1]");
    }
    return e;
}

ObservedTable table_from(const json& body) {
    const json& t = member(body, "", "table");
    if (!t.is_object()) throw field_error("table", "must be an object");
    ObservedTable table{number(t, "table.", "a"), number(t, "table.", "b"),
                        number(t, "table.", "n_target"), number(t, "table.", "n_comparator")};
    if (!(table.n_target > 0.0)) throw field_error("table.n_target", "must be positive");
    if (!(table.n_comparator > 0.0)) throw field_error("table.n_comparator", "must be positive");
    if (!(table.a >= 0.0 && table.a <= table.n_target)) {
        throw field_error("table.a", "must lie in [0, n_target]");
    }
    if (!(table.b >= 0.0 && table.b <= table.n_comparator)) {
        throw field_error("table.b", "must lie in [0, n_comparator]");
    }
    return table;
}

json parse_body(const std::string& body) {
    json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw HttpError{400, "malformed_json", "request body must be a JSON object"};
    }
    return doc;
}

report::CorrectRequest correct_request(const json& body) {
    report::CorrectRequest req;
    req.table = table_from(body);
    const json& errors = member(body, "", "errors");
    if (!errors.is_object()) throw field_error("errors", "must be an object");
    if (errors.contains("target") || errors.contains("comparator")) {
        req.errors = ErrorModel::differential(arm_errors(member(errors, "errors.", "target"), "errors.target."),
                                              arm_errors(member(errors, "errors.", "comparator"),
                                                         "errors.comparator."));
    } else {
        req.errors = ErrorModel::non_differential(arm_errors(errors, "errors."));
    }
    if (body.contains("variance_method")) {
        const json& m = body.at("variance_method");
        if (!m.is_string()) throw field_error("variance_method", "must be a string");
        try {
            req.method = parse_variance_method(m.get<std::string>());
        } catch (const Error& e) {
            throw field_error("variance_method", e.what());
        }
        if (req.method == VarianceMethod::woolf_observed) {
            throw field_error("variance_method", "must be woolf_corrected or delta_corrected");
        }
    }
    return req;
}

json canonical(const report::CorrectRequest& r) {
    return {{"table", report::to_json(r.table)},
            {"errors", report::to_json(r.errors)},
            {"variance_method", std::string(to_string(r.method))}};
}

struct SweepRequest {
    SweepSpec spec;
    SweepEmit emit = SweepEmit::frontier_only;
};

SweepRequest sweep_request(const json& body) {
    SweepRequest req;
    const ObservedTable table = table_from(body);
    const double step = number(body, "", "step", 1e-4);
    if (!(step > 0.0)) throw field_error("step", "must be positive");
    if (body.contains("window")) {
        const json& w = body.at("window");
        if (!w.is_object()) throw field_error("window", "must be an object");
        req.spec = {table, number(w, "window.", "sens_min"), number(w, "window.", "sens_max"),
                    number(w, "window.", "spec_min"), number(w, "window.", "spec_max"), step};
    } else {
        const ArmErrors center = arm_errors(member(body, "", "center"), "center.");
        const double half = number(body, "", "half_width", 0.05);
        if (!(half >= 0.0)) throw field_error("half_width", "must be non-negative");
        req.spec = window_around(table, center, half, step);
    }
    try {
        req.spec.validate();
    } catch (const Error& e) {
        throw field_error("window", e.what());
    }
    if (body.contains("emit")) {
        const json& e = body.at("emit");
        if (e == "grid") req.emit = SweepEmit::full_grid;
        else if (e == "frontier") req.emit = SweepEmit::frontier_only;
        else throw field_error("emit", "must be \"grid\" or \"frontier\"");
    }
    return req;
}

std::string param(const Request& r, const std::string& key, std::optional<std::string> fallback) {
    auto it = r.params.find(key);
    if (it != r.params.end()) return it->second;
    if (fallback) return *fallback;
    throw field_error(key, "query parameter required");
}

double number_param(const Request& r, const std::string& key, std::optional<std::string> fallback) {
    const std::string text = param(r, key, std::move(fallback));
    try {
        return parse_double(text);
    } catch (const Error&) {
        throw field_error(key, "not a number: '" + text + "'");
    }
}

CountMode counts_param(const Request& r) {
    const std::string text = param(r, "counts", "whole");
    try {
        return parse_count_mode(text);
    } catch (const Error& e) {
        throw field_error("counts", e.what());
    }
}

std::string ok_body(json result) {
    return json{{"ok", true}, {"result", std::move(result)}}.dump();
}

std::string error_body(const HttpError& e) {
    return json{{"ok", false},
                {"error", {{"code", e.code}, {"message", e.message}, {"diagnostics", e.diagnostics}}}}
        .dump();
}

std::string etag_for(const std::string& canonical_request) {
    std::array<char, 17> hex{};
    std::snprintf(hex.data(), hex.size(), "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_request)));
    return "\"" + std::string(hex.data()) + "\"";
}

HttpError from_domain(const Error& e) {
    return {422, std::string(to_string(e.code())), e.what()};
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::optional<std::string> LruCache::get(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->second;
}

void LruCache::put(const std::string& key, std::string value) {
    if (capacity_ == 0) return;
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it != index_.end()) {
        it->second->second = std::move(value);  // last writer wins
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.emplace_front(key, std::move(value));
    index_[key] = order_.begin();
    if (order_.size() > capacity_) {
        index_.erase(order_.back().first);
        order_.pop_back();
    }
}

std::size_t LruCache::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

Api::Api(ServiceConfig config) : config_(std::move(config)), cache_(config_.cache_entries) {}

Response Api::handle(const Request& request) {
    // Each route yields a canonical key and a way to compute the result.
    std::string key;
    std::function<json()> compute;
    try {
        if (request.path == "/healthz" && request.method == "GET") {
            return {200, json{{"ok", true}}.dump(), std::nullopt};
        } else if (request.path == "/api/v1/correct" && request.method == "POST") {
            const report::CorrectRequest req = correct_request(parse_body(request.body));
            key = "correct " + canonical(req).dump();
            compute = [req] { return report::to_json(report::run_correct(req)); };
        } else if (request.path == "/api/v1/sweep" && request.method == "POST") {
            const SweepRequest req = sweep_request(parse_body(request.body));
            const bool grid = req.emit == SweepEmit::full_grid;
            const std::size_t size = grid ? req.spec.grid_size() : req.spec.sensitivity_axis().size();
            if (size > config_.sweep_cap) {
                throw HttpError{413, std::string(to_string(ErrorCode::grid_too_large)),
                                std::string(grid ? "window of " : "frontier of ") + std::to_string(size) +
                                    (grid ? " cells" : " rows") + " exceeds the per-request cap of " +
                                    std::to_string(config_.sweep_cap),
                                {{"cells", size}, {"cap", config_.sweep_cap}}};
            }
            key = "sweep " + json{{"spec", report::to_json(req.spec)}, {"grid", grid}}.dump();
            const int threads = config_.threads;
            compute = [req, grid, threads] {
                SweepOptions opts;
                opts.threads = threads;
                json out = {{"spec", report::to_json(req.spec)}, {"emit", grid ? "grid" : "frontier"}};
                if (grid) out["cells"] = report::to_json(sweep_grid(req.spec, opts));
                else out["frontier"] = report::to_json(sweep_frontier(req.spec, opts));
                return out;
            };
        } else if (request.path == "/api/v1/synth/stratum" && request.method == "GET") {
            ScenarioSpec spec;
            spec.incidence = number_param(request, "ip", std::nullopt);
            spec.uncorrected_or = number_param(request, "or", std::nullopt);
            spec.n_per_arm = number_param(request, "n", "1000000");
            spec.counts = counts_param(request);
            try {
                spec.validate();
            } catch (const Error& e) {
                throw HttpError{422, std::string(to_string(e.code())), e.what()};
            }
            key = "stratum ip=" + format_shortest(spec.incidence) + "&or=" +
                  format_shortest(spec.uncorrected_or) + "&n=" + format_shortest(spec.n_per_arm) +
                  "&counts=" + std::string(to_string(spec.counts));
            compute = [spec] { return report::stratum_json(sweep_stratum(spec)); };
        } else if (request.path == "/api/v1/synth/estimable" && request.method == "GET") {
            SpaceAxes axes;
            axes.n_per_arm = number_param(request, "n", "1000000");
            axes.counts = counts_param(request);
            if (!(axes.n_per_arm > 0.0)) throw field_error("n", "must be positive");
            key = "estimable n=" + format_shortest(axes.n_per_arm) +
                  "&counts=" + std::string(to_string(axes.counts));
            const int threads = config_.threads;
            compute = [axes, threads] {
                const auto space = full_space(axes, Execution::parallel, threads);
                return json{{"rows", report::estimable_json(estimable_curve(space))}};
            };
        } else {
            return {404, error_body({404, "not_found", "no route for " + request.method + " " + request.path}),
                    std::nullopt};
        }

        const std::string etag = etag_for(key);
        if (request.if_none_match && *request.if_none_match == etag) return {304, "", etag};
        if (auto hit = cache_.get(key)) return {200, *hit, etag};
        std::string body = ok_body(compute());
        cache_.put(key, body);
        return {200, std::move(body), etag};
    } catch (const HttpError& e) {
        return {e.status, error_body(e), std::nullopt};
    } catch (const Error& e) {
        return {422, error_body(from_domain(e)), std::nullopt};
    }
}

struct Server::Impl {
    explicit Impl(ServiceConfig config) : api(std::move(config)) {}

    Api api;
    httplib::Server http;
};

Server::Server(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    Impl& s = *impl_;
    const std::string origin = s.api.config().cors_origin;

    auto route = [&s](const httplib::Request& req, httplib::Response& res) {
        Request r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.params[k] = v;
        r.body = req.body;
        if (req.has_header("If-None-Match")) r.if_none_match = req.get_header_value("If-None-Match");
        const Response out = s.api.handle(r);
        res.status = out.status;
        if (out.etag) res.set_header("ETag", *out.etag);
        if (out.status != 304) res.set_content(out.body, "application/json");
    };
    s.http.Get(R"(/.*)", route);
    s.http.Post(R"(/.*)", route);
    s.http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
    s.http.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", origin);
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match");
        res.set_header("Access-Control-Expose-Headers", "ETag");
    });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port == 0) return impl_->http.bind_to_any_port(host);
    return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() {
    if (impl_) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace qba::service
