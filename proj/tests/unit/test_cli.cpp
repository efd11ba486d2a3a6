#include <doctest.h>

#include <sstream>

#include "support.hpp"
#include "vulnscape/cli.hpp"
#include "vulnscape/csv.hpp"
#include "vulnscape/pipeline.hpp"

using namespace vulnscape;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string data() { return testing::fixture("data").string(); }

const char* kSubcommands[] = {"ingest", "embed", "cluster", "validate", "screen", "stability", "retention", "link", "serve"};

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("help exits 0 everywhere and shows defaults") {
        auto top = run({"--help"});
        CHECK(top.code == 0);
        for (const char* sub : kSubcommands) {
            auto r = run({sub, "--help"});
            CAPTURE(sub);
            CHECK(r.code == 0);
            CHECK(r.out.find("Usage: vulnscape " + std::string(sub)) != std::string::npos);
        }
        auto c = run({"cluster", "--help"}).out;
        CHECK(c.find("--restarts INT [50]") != std::string::npos);
        CHECK(c.find("--iterations INT [1000]") != std::string::npos);
        auto v = run({"validate", "--help"}).out;
        CHECK(v.find("--repeats INT [100]") != std::string::npos);
        CHECK(v.find("--sample-fraction FLOAT [0.3]") != std::string::npos);
    }

    TEST_CASE("usage and validation errors exit 1") {
        auto unknown = run({"embed", "--seed", "1", "--bogus"});
        CHECK(unknown.code == 1);
        CHECK(run({"frobnicate"}).code == 1);
        CHECK(run({}).code == 1);
        auto no_seed = run({"cluster", "--data-dir", data(), "--out", "-"});
        CHECK(no_seed.code == 1);
        CHECK(no_seed.err.find("--seed") != std::string::npos);
        auto k0 = run({"cluster", "--k", "0", "--seed", "1", "--data-dir", data(), "--out", "-"});
        CHECK(k0.code == 1);
        CHECK(k0.err.find("K_EXCEEDS_N") != std::string::npos);
        CHECK(k0.err.find("1 <= k <= n") != std::string::npos);
        CHECK(run({"embed", "--seed", "1", "--wave", "1", "--data-dir", data(), "--out", "-"}).code == 1);
        CHECK(run({"validate", "--seed", "1", "--exponent", "two", "--data-dir", data()}).code == 1);
    }

    TEST_CASE("runtime failures exit 2") {
        auto missing = run({"embed", "--seed", "1", "--edi", "/definitely/not/here.csv", "--out", "-"});
        CHECK(missing.code == 2);
        CHECK(missing.err.find("IO_ERROR") != std::string::npos);
        auto dir = testing::scratch("cli-bad-manifest");
        csv::write_text(dir / "manifest.json", "{broken");
        CHECK(run({"retention", "--manifest", (dir / "manifest.json").string(), "--out-dir", (dir / "out").string()}).code != 0);
    }

    TEST_CASE("embed writes a file and is reproducible") {
        auto dir = testing::scratch("cli-embed");
        auto edi = (testing::fixture("data") / "edi.csv").string();
        auto a = run({"embed", "--method", "tsne", "--wave", "6", "--seed", "42", "--edi", edi, "--out", (dir / "a.csv").string()});
        REQUIRE(a.code == 0);
        auto b = run({"embed", "--method", "tsne", "--wave", "6", "--seed", "42", "--edi", edi, "--out", "-"});
        REQUIRE(b.code == 0);
        auto text = csv::read_text(dir / "a.csv");
        CHECK(text == b.out);
        auto table = csv::parse(text);
        CHECK(table.header == csv::Row{"key", "wave", "x", "y"});
        CHECK(table.rows.size() == 24);
    }

    TEST_CASE("data directory falls back to the environment variable") {
        auto with_env = [&](const char* value, auto&& body) {
            setenv("VULNSCAPE_DATA_DIR", value, 1);
            body();
            unsetenv("VULNSCAPE_DATA_DIR");
        };
        with_env(data().c_str(), [] {
            auto r = run({"ingest"});
            CHECK(r.code == 0);
            CHECK(r.out.find("\"neighborhoods\": 24") != std::string::npos);
        });
    }

    TEST_CASE("retention run reproduces the golden tables") {
        auto out = testing::scratch("cli-retention");
        auto r = run({"retention", "--data-dir", data(), "--out-dir", out.string()});
        REQUIRE(r.code == 0);
        CHECK(testing::diff_dirs(out, testing::golden("retention"), {"timings.json", "manifest.json"}).empty());
        auto again = testing::scratch("cli-retention-replay");
        auto rr = run({"retention", "--manifest", (out / "manifest.json").string(), "--out-dir", again.string()});
        REQUIRE(rr.code == 0);
        CHECK(testing::diff_dirs(out, again, {"timings.json"}).empty());
    }

    TEST_CASE("stability run matches the library and ignores thread count") {
        auto a = testing::scratch("cli-stability-1"), b = testing::scratch("cli-stability-8");
        std::vector<std::string> common{"stability", "--seed", "9", "--repeats", "20", "--data-dir", data(), "--out-dir"};
        auto one = common, eight = common;
        one.insert(one.begin(), {"--threads", "1"});
        one.push_back(a.string());
        eight.insert(eight.begin(), {"--threads", "8"});
        eight.push_back(b.string());
        REQUIRE(run(one).code == 0);
        REQUIRE(run(eight).code == 0);
        CHECK(testing::diff_dirs(a, b, {"timings.json"}).empty());

        pipeline::TopDownConfig c;
        c.seed = 9;
        c.hopkins.repeats = 20;
        auto lib = testing::scratch("cli-stability-lib");
        pipeline::run_topdown(pipeline::load(pipeline::DataPaths::from_dir(data())), c, lib);
        CHECK(testing::diff_dirs(a, lib, {"timings.json"}).empty());
    }

    TEST_CASE("screen, validate and link print tables") {
        auto s = run({"screen", "--seed", "3", "--data-dir", data(), "--out", "-"});
        REQUIRE(s.code == 0);
        auto st = csv::parse(s.out);
        CHECK(st.header == csv::Row{"var_id", "label", "category", "test_used", "statistic", "p_value", "significant", "flags"});
        auto v = run({"validate", "--seed", "3", "--repeats", "20", "--data-dir", data(), "--out", "-"});
        REQUIRE(v.code == 0);
        CHECK_FALSE(csv::parse(v.out).rows.empty());
        auto l = run({"link", "--data-dir", data(), "--scale", "two_or_more"});
        REQUIRE(l.code == 0);
        CHECK(l.out.find("\"r\"") != std::string::npos);
        CHECK(run({"link", "--data-dir", data(), "--group", "Knitting"}).code == 1);
    }
}
