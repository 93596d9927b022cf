#include <doctest.h>

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "qba/report.hpp"
#include "qba/service.hpp"

using nlohmann::json;
using namespace qba::service;

namespace {

Response post(Api& api, const std::string& path, const std::string& body) {
    return api.handle({"POST", path, {}, body, std::nullopt});
}

Response get(Api& api, const std::string& path, std::map<std::string, std::string> params = {}) {
    return api.handle({"GET", path, std::move(params), "", std::nullopt});
}

const char* kWorked = R"({"table":{"a":100,"b":100,"n_target":100000,"n_comparator":100000},
                          "errors":{"sensitivity":0.5,"specificity":0.99}})";

}  // namespace

TEST_SUITE("service") {

TEST_CASE("fnv1a reference vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("lru cache evicts the least recently used entry") {
    LruCache c(2);
    c.put("a", "1");
    c.put("b", "2");
    CHECK(c.get("a") == "1");
    c.put("c", "3");
    CHECK_FALSE(c.get("b"));
    CHECK(c.get("a") == "1");
    CHECK(c.get("c") == "3");
    c.put("c", "4");
    CHECK(c.get("c") == "4");
    CHECK(c.size() == 2);
}

TEST_CASE("healthz") {
    Api api;
    const Response r = get(api, "/healthz");
    CHECK(r.status == 200);
    CHECK(json::parse(r.body)["ok"] == true);
}

TEST_CASE("correct returns structured invalid diagnostics") {
    Api api;
    const Response r = post(api, "/api/v1/correct", kWorked);
    REQUIRE(r.status == 200);
    const json doc = json::parse(r.body);
    REQUIRE(doc["ok"] == true);
    const json& res = doc["result"];
    CHECK(res["kind"] == "invalid");
    CHECK(std::fabs(res["diagnostics"]["A"].get<double>() + 1836.73) < 0.01);
    CHECK(res["diagnostics"]["target"]["reason"] == "negative_cell");
    CHECK(res["corrected"].is_null());
}

TEST_CASE("correct at perfect classification returns the observed table") {
    Api api;
    const Response r = post(api, "/api/v1/correct",
                            R"({"table":{"a":30,"b":20,"n_target":1000,"n_comparator":900},
                                "errors":{"sensitivity":1,"specificity":1}})");
    REQUIRE(r.status == 200);
    const json res = json::parse(r.body)["result"];
    CHECK(res["kind"] == "corrected");
    CHECK(res["corrected_estimate"]["odds_ratio"] == res["observed_estimate"]["odds_ratio"]);
    CHECK(res["metrics"]["bias_difference"] == 0.0);
}

TEST_CASE("differential errors and variance method") {
    Api api;
    const Response r = post(api, "/api/v1/correct",
                            R"({"table":{"a":1500,"b":1400,"n_target":100000,"n_comparator":100000},
                                "errors":{"target":{"sensitivity":0.9,"specificity":0.999},
                                          "comparator":{"sensitivity":0.8,"specificity":0.998}},
                                "variance_method":"delta_corrected"})");
    REQUIRE(r.status == 200);
    const json res = json::parse(r.body)["result"];
    CHECK(res["errors"]["mode"] == "differential");
    CHECK(res["variance_method"] == "delta_corrected");
    CHECK(res["estimable"] == true);
}

TEST_CASE("malformed and invalid requests") {
    Api api;
    Response r = post(api, "/api/v1/correct", "{not json");
    CHECK(r.status == 400);
    CHECK(json::parse(r.body)["error"]["code"] == "malformed_json");

    r = post(api, "/api/v1/correct", R"({"table":{"a":1,"b":1,"n_target":10},"errors":{"sensitivity":1,"specificity":1}})");
    CHECK(r.status == 422);
    json e = json::parse(r.body)["error"];
    CHECK(e["diagnostics"]["field"] == "table.n_comparator");

    r = post(api, "/api/v1/correct", R"({"table":{"a":11,"b":1,"n_target":10,"n_comparator":10},"errors":{"sensitivity":1,"specificity":1}})");
    CHECK(r.status == 422);
    CHECK(json::parse(r.body)["error"]["diagnostics"]["field"] == "table.a");

    r = post(api, "/api/v1/correct", R"({"table":{"a":1,"b":1,"n_target":10,"n_comparator":10},"errors":{"sensitivity":1.2,"specificity":1}})");
    CHECK(r.status == 422);
    CHECK(json::parse(r.body)["error"]["diagnostics"]["field"] == "errors.sensitivity");

    r = post(api, "/api/v1/correct", R"({"table":{"a":1,"b":1,"n_target":10,"n_comparator":10},"errors":{"sensitivity":1,"specificity":1},"variance_method":"woolf_observed"})");
    CHECK(r.status == 422);

    r = get(api, "/api/v1/nothing");
    CHECK(r.status == 404);
    CHECK(json::parse(r.body)["ok"] == false);
}

TEST_CASE("sweep frontier and grid") {
    Api api;
    Response r = post(api, "/api/v1/sweep",
                      R"({"table":{"a":100,"b":100,"n_target":100000,"n_comparator":100000},
                          "window":{"sens_min":0.5,"sens_max":0.5,"spec_min":0.99,"spec_max":1},
                          "emit":"frontier"})");
    REQUIRE(r.status == 200);
    json res = json::parse(r.body)["result"];
    REQUIRE(res["frontier"]["rows"].size() == 1);
    CHECK(res["frontier"]["rows"][0]["min_specificity"].get<double>() == doctest::Approx(0.9991));

    r = post(api, "/api/v1/sweep",
             R"({"table":{"a":1500,"b":1400,"n_target":100000,"n_comparator":100000},
                 "center":{"sensitivity":0.6,"specificity":0.99},"half_width":0.005,"emit":"grid"})");
    REQUIRE(r.status == 200);
    res = json::parse(r.body)["result"];
    CHECK(res["cells"].size() == 101u * 101u);
    CHECK(res["spec"]["cells"] == 101u * 101u);
}

TEST_CASE("oversized sweeps return 413") {
    Api api;
    const Response r = post(api, "/api/v1/sweep",
                            R"({"table":{"a":100,"b":100,"n_target":100000,"n_comparator":100000},
                                "window":{"sens_min":0,"sens_max":1,"spec_min":0,"spec_max":1},"emit":"grid"})");
    CHECK(r.status == 413);
    const json e = json::parse(r.body)["error"];
    CHECK(e["code"] == "grid_too_large");
    CHECK(e["diagnostics"]["cap"] == 250000);

    ServiceConfig small;
    small.sweep_cap = 10;
    Api tight(small);
    const Response f = post(tight, "/api/v1/sweep",
                            R"({"table":{"a":100,"b":100,"n_target":100000,"n_comparator":100000},
                                "window":{"sens_min":0,"sens_max":1,"spec_min":0,"spec_max":1},
                                "step":0.01,"emit":"frontier"})");
    CHECK(f.status == 413);
}

TEST_CASE("etags and conditional requests") {
    Api api;
    const Response first = post(api, "/api/v1/correct", kWorked);
    REQUIRE(first.etag);
    CHECK(first.etag->size() == 18);
    // Same request with different whitespace and key order.
    const Response second = post(api, "/api/v1/correct",
                                 R"({"errors":{"specificity":0.99,"sensitivity":0.5},
                                     "table":{"n_comparator":100000,"n_target":100000,"b":100,"a":100}})");
    CHECK(second.etag == first.etag);
    CHECK(second.body == first.body);
    CHECK(api.cached() == 1);

    Request cond{"POST", "/api/v1/correct", {}, kWorked, first.etag};
    const Response not_modified = api.handle(cond);
    CHECK(not_modified.status == 304);
    CHECK(not_modified.body.empty());

    cond.if_none_match = "\"0000000000000000\"";
    CHECK(api.handle(cond).status == 200);
}

TEST_CASE("synthetic stratum and estimable curve") {
    Api api;
    Response r = get(api, "/api/v1/synth/stratum", {{"ip", "0.1"}, {"or", "1.001"}});
    REQUIRE(r.status == 200);
    json res = json::parse(r.body)["result"];
    CHECK(res["estimable"] == 0.855);
    CHECK(res["valid_cells"] == 342);
    const json& mx = res["rows"][4];
    CHECK(mx["point"] == "max");
    CHECK(std::fabs(mx["or_qba"].get<double>() - 1.019) < 5e-4);
    CHECK(mx["sensitivity"] == 0.15);
    CHECK(std::fabs(mx["specificity"].get<double>() - 0.905263) < 5e-7);
    CHECK(res["contours"].is_object());

    CHECK(get(api, "/api/v1/synth/stratum", {{"ip", "0.1"}}).status == 422);
    CHECK(get(api, "/api/v1/synth/stratum", {{"ip", "x"}, {"or", "2"}}).status == 422);
    CHECK(get(api, "/api/v1/synth/stratum", {{"ip", "0.00001"}, {"or", "10"}, {"n", "100000"}}).status == 422);

    r = get(api, "/api/v1/synth/estimable");
    REQUIRE(r.status == 200);
    res = json::parse(r.body)["result"];
    REQUIRE(res["rows"].size() == 30);
    CHECK(res["rows"][0]["valid_cells"] == 342);
}

TEST_CASE("http server with CORS") {
    Server server;
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread t([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    auto h = client.Get("/healthz");
    REQUIRE(h);
    CHECK(h->status == 200);
    CHECK(h->get_header_value("Access-Control-Allow-Origin") == "*");

    auto c = client.Post("/api/v1/correct", kWorked, "application/json");
    REQUIRE(c);
    CHECK(c->status == 200);
    const std::string etag = c->get_header_value("ETag");
    CHECK(etag.size() == 18);
    CHECK(json::parse(c->body)["result"]["kind"] == "invalid");

    auto again = client.Post("/api/v1/correct", {{"If-None-Match", etag}}, kWorked, "application/json");
    REQUIRE(again);
    CHECK(again->status == 304);

    auto bad = client.Post("/api/v1/correct", "[", "application/json");
    REQUIRE(bad);
    CHECK(bad->status == 400);

    auto s = client.Get("/api/v1/synth/stratum?ip=0.1&or=10");
    REQUIRE(s);
    CHECK(s->status == 200);
    CHECK(json::parse(s->body)["result"]["valid_cells"] == 85);

    auto pre = client.Options("/api/v1/correct");
    REQUIRE(pre);
    CHECK(pre->status == 204);
    CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

    server.stop();
    t.join();
}

}  // TEST_SUITE
