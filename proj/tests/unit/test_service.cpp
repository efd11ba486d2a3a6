#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <thread>

#include "support.hpp"
#include "vulnscape/csv.hpp"
#include "vulnscape/io.hpp"
#include "vulnscape/service.hpp"
#include "vulnscape/synthetic.hpp"

using namespace vulnscape;
using namespace vulnscape::service;

namespace {

Service& fixture_service() {
    static Service s(testing::fixture("data"));
    return s;
}

Response get(Service& s, const std::string& path, std::map<std::string, std::string> query = {}) {
    return s.handle({"GET", path, std::move(query), ""});
}

Response post(Service& s, const std::string& path, const json& body, std::map<std::string, std::string> query = {}) {
    return s.handle({"POST", path, std::move(query), body.dump()});
}

// Quick schedule so each analysis request stays short.
json quick(json body) {
    body["iterations"] = 400;
    body["repeats"] = 20;
    return body;
}

std::set<std::string> significant_ids(const json& screening) {
    std::set<std::string> out;
    for (const auto& r : screening["results"])
        if (r["significant"].get<bool>()) out.insert(r["var_id"].get<std::string>());
    return out;
}

stats::VariableTestResult sig(std::string id, double p) {
    stats::VariableTestResult r;
    r.var_id = std::move(id);
    r.test_used = stats::TestUsed::anova;
    r.p_value = r.p_adjusted = p;
    r.significant = true;
    return r;
}

}  // namespace

TEST_SUITE("service") {
    TEST_CASE("health and EDI rows") {
        auto& s = fixture_service();
        auto h = get(s, "/api/health");
        CHECK(h.status == 200);
        CHECK(h.as_json() == json{{"status", "ok"}});
        auto e = get(s, "/api/edi", {{"wave", "6"}, {"scale", "one_or_more"}});
        REQUIRE(e.status == 200);
        auto body = e.as_json();
        CHECK(body["rows"].size() == 24);
        CHECK(body["wave"] == 6);
        CHECK(get(s, "/api/edi", {{"wave", "1"}}).status == 422);
        CHECK(get(s, "/api/edi", {{"scale", "happiness"}}).status == 422);
        auto missing = get(s, "/api/nothing");
        CHECK(missing.status == 404);
        CHECK(missing.as_json()["error"]["code"] == "NOT_FOUND");
    }

    TEST_CASE("cluster validation errors are structured") {
        auto& s = fixture_service();
        auto r = post(s, "/api/cluster", {{"k", 0}});
        CHECK(r.status == 422);
        CHECK(r.as_json()["error"]["code"] == "K_EXCEEDS_N");
        auto big = post(s, "/api/cluster", {{"k", 25}});
        CHECK(big.status == 422);
        auto bad = s.handle({"POST", "/api/cluster", {}, "{not json"});
        CHECK(bad.status == 422);
        CHECK(post(s, "/api/cluster", {{"method", "kpca"}}).status == 422);
        CHECK(post(s, "/api/cluster", {{"wave", 9}}).status == 422);
    }

    TEST_CASE("cluster, embed, validate and stability") {
        auto& s = fixture_service();
        auto c = post(s, "/api/cluster", quick({{"seed", 4}, {"wave", 5}}));
        REQUIRE(c.status == 200);
        auto cj = c.as_json();
        CHECK(cj["k"] == 3);
        CHECK(cj["mode"] == "w5");
        CHECK(cj["points"].size() == 24);
        CHECK(cj["neighborhood_labels"].size() == 24);

        auto all = post(s, "/api/cluster", quick({{"seed", 4}, {"mode", "all"}, {"method", "umap"}}));
        REQUIRE(all.status == 200);
        CHECK(all.as_json()["k"] == 4);
        CHECK(all.as_json()["points"].size() == 120);

        auto e = post(s, "/api/embed", quick({{"seed", 4}}));
        REQUIRE(e.status == 200);
        CHECK(e.as_json()["points"].size() == 24);
        CHECK_FALSE(e.as_json()["trace"].empty());

        auto v = post(s, "/api/validate", quick({{"seed", 4}, {"exponent", "one"}}));
        REQUIRE(v.status == 200);
        auto vj = v.as_json();
        CHECK(vj["per_cluster"].size() == 3);
        CHECK(vj["config"]["exponent"] == "one");
        CHECK(vj["overall"]["values"].size() == 20);

        auto st = get(s, "/api/stability", {{"seed", "4"}});
        REQUIRE(st.status == 200);
        CHECK(st.as_json()["rows"].size() == 24);
        CHECK(st.as_json()["waves"] == json{2, 3, 4, 5, 6});
    }

    TEST_CASE("identical POST bodies give identical results") {
        Service a(testing::fixture("data")), b(testing::fixture("data"));
        json body = quick({{"seed", 11}, {"wave", 3}});
        auto r1 = post(a, "/api/cluster", body);
        auto r2 = post(a, "/api/cluster", body);  // cached
        auto r3 = post(b, "/api/cluster", body);  // recomputed
        CHECK(r1.body == r2.body);
        CHECK(r1.body == r3.body);
    }

    TEST_CASE("screening alpha nesting and suggestions") {
        Service s(testing::fixture("data"));
        auto none = get(s, "/api/census/suggest");
        CHECK(none.status == 409);
        CHECK(none.as_json()["error"]["code"] == "NO_RUN_AVAILABLE");
        for (int seed : {1, 2, 3}) {
            auto loose = post(s, "/api/census/screen", quick({{"seed", seed}, {"alpha", 0.05}}));
            auto tight = post(s, "/api/census/screen", quick({{"seed", seed}, {"alpha", 0.01}}));
            REQUIRE(loose.status == 200);
            REQUIRE(tight.status == 200);
            auto a = significant_ids(loose.as_json()), b = significant_ids(tight.as_json());
            CHECK(std::includes(a.begin(), a.end(), b.begin(), b.end()));
            CHECK_FALSE(b.empty());
        }
        auto sugg = get(s, "/api/census/suggest", {{"top_n", "5"}});
        REQUIRE(sugg.status == 200);
        auto vars = sugg.as_json()["variables"];
        CHECK(vars.size() <= 5);
        CHECK_FALSE(vars.empty());
        CHECK(get(s, "/api/census/suggest", {{"top_n", "0"}}).status == 422);
    }

    TEST_CASE("suggest_variables ordering and diversity") {
        std::vector<CensusVariable> vars;
        const CensusCategory cats[] = {CensusCategory::Income, CensusCategory::Employment, CensusCategory::Population,
                                       CensusCategory::CostOfLiving};
        std::vector<stats::VariableTestResult> results;
        for (int i = 0; i < 20; ++i) {
            std::string id = "x" + std::to_string(i);
            vars.push_back({id, id, cats[i < 8 ? 0 : i % 4], CensusKind::count, "", ""});
            results.push_back(sig(id, 0.001 * (i + 1)));
        }
        Catalog catalog(vars);
        auto four = suggest_variables(results, catalog, 4);
        REQUIRE(four.size() == 4);
        std::set<CensusCategory> seen;
        for (const auto& id : four) seen.insert(catalog.find(id)->category);
        CHECK(seen.size() == 4);
        CHECK(four == std::vector<std::string>{"x0", "x9", "x10", "x11"});
        auto ten = suggest_variables(results, catalog);
        CHECK(ten == std::vector<std::string>{"x0", "x9", "x10", "x11", "x1", "x2", "x3", "x4", "x5", "x6"});

        std::vector<stats::VariableTestResult> three{sig("b", 0.02), sig("a", 0.01), sig("c", 0.03)};
        Catalog one_cat({{"a", "a", CensusCategory::Income, CensusKind::count, "", ""},
                         {"b", "b", CensusCategory::Income, CensusKind::count, "", ""},
                         {"c", "c", CensusCategory::Income, CensusKind::count, "", ""}});
        CHECK(suggest_variables(three, one_cat) == std::vector<std::string>{"a", "b", "c"});
        auto ns = sig("d", 0.5);
        ns.significant = false;
        three.push_back(ns);
        CHECK(suggest_variables(three, one_cat).size() == 3);
        try {
            suggest_variables({}, one_cat);
            FAIL("expected NoRunAvailable");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NoRunAvailable);
        }
    }

    TEST_CASE("upload surfaces the birth filter and stays in its session") {
        auto& s = fixture_service();
        auto recs = synthetic::registrations(9, {"N01", "N02"}, 60);
        recs[0].birth_date = Date(1999, 5, 5);
        recs[0].account_created = Date(2004, 1, 1);
        auto up = s.handle({"POST", "/api/class/upload", {}, serialize_registrations(recs)});
        REQUIRE(up.status == 200);
        auto uj = up.as_json();
        CHECK(uj["records"] == 60);
        CHECK(uj["rejection_reasons"]["birth_date"].get<int>() >= 1);
        std::string session = uj["session"];
        CHECK(session != "default");

        auto sum = get(s, "/api/class/summary", {{"session", session}, {"facet", "exit_age"}});
        REQUIRE(sum.status == 200);
        auto sj = sum.as_json();
        CHECK(sj["facets"].size() == 1);
        CHECK(sj["rejection_reasons"]["birth_date"].get<int>() >= 1);
        double total = 0;
        for (const auto& row : sj["facets"]["exit_age"]["rows"]) total += row["proportion"].get<double>();
        CHECK(total == doctest::Approx(1.0));

        auto bad = s.handle({"POST", "/api/class/upload", {}, "client_id\nx\n"});
        CHECK(bad.status == 422);
        CHECK(bad.as_json()["error"]["code"] == "MISSING_COLUMN");
        CHECK(get(s, "/api/class/summary", {{"session", "nope"}}).status == 404);
        // the default session keeps the fixture registrations
        auto def = get(s, "/api/class/summary", {{"facet", "entry_age"}});
        REQUIRE(def.status == 200);
        CHECK(def.as_json()["kept"].get<int>() + def.as_json()["rejected"].get<int>() == 500);
    }

    TEST_CASE("row errors carry row and field") {
        auto& s = fixture_service();
        auto recs = synthetic::registrations(9, {"N01"}, 3);
        auto text = serialize_registrations(recs);
        auto table = csv::parse(text);
        table.rows[1][table.require("birth_date")] = "2010-02-30";
        auto r = s.handle({"POST", "/api/class/upload", {}, csv::to_string(table)});
        CHECK(r.status == 422);
        auto err = r.as_json()["error"];
        CHECK(err["code"] == "BAD_DATE");
        CHECK(err["row"] == 3);
        CHECK(err["field"] == "birth_date");
    }

    TEST_CASE("neighborhood geometry passthrough") {
        auto& s = fixture_service();
        auto r = get(s, "/api/geo/neighborhoods");
        CHECK(r.status == 200);
        CHECK(r.content_type == "application/geo+json");
        CHECK(r.body == csv::read_text(testing::fixture("data") / "neighborhoods.geojson"));
        Service empty(std::nullopt);
        CHECK(get(empty, "/api/geo/neighborhoods").status == 404);
    }

    TEST_CASE("async jobs match synchronous results") {
        Service s(testing::fixture("data"));
        json body = quick({{"seed", 8}, {"wave", 4}});
        auto sync = post(s, "/api/cluster", body);
        auto queued = post(s, "/api/cluster", body, {{"async", "1"}});
        REQUIRE(queued.status == 202);
        std::string id = queued.as_json()["job_id"];
        s.wait_idle();
        auto polled = get(s, "/api/jobs/" + id).as_json();
        CHECK(polled["status"] == "done");
        CHECK(polled["result"] == sync.as_json());

        auto failing = post(s, "/api/cluster", {{"k", 0}}, {{"async", "1"}});
        std::string fid = failing.as_json()["job_id"];
        s.wait_idle();
        auto fj = get(s, "/api/jobs/" + fid).as_json();
        CHECK(fj["status"] == "failed");
        CHECK(fj["http_status"] == 422);
        CHECK(fj["error"]["code"] == "K_EXCEEDS_N");
        CHECK(get(s, "/api/jobs/j999").status == 404);
    }

    TEST_CASE("concurrent requests are safe") {
        Service s(testing::fixture("data"));
        json body = quick({{"seed", 21}});
        std::vector<std::string> bodies(4);
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < bodies.size(); ++i)
            threads.emplace_back([&, i] { bodies[i] = post(s, "/api/validate", body).body; });
        for (auto& t : threads) t.join();
        for (const auto& b : bodies) CHECK(b == bodies[0]);
    }

    TEST_CASE("status codes") {
        CHECK(status_for(ErrorCode::NotFound) == 404);
        CHECK(status_for(ErrorCode::NoRunAvailable) == 409);
        CHECK(status_for(ErrorCode::KExceedsN) == 422);
        CHECK(status_for(ErrorCode::NonFiniteGradient) == 500);
    }
}
