#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"
#include "vulnscape/error.hpp"
#include "vulnscape/rng.hpp"
#include "vulnscape/stats.hpp"

using namespace vulnscape;
using namespace vulnscape::stats;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvalidArgument;
}

std::vector<double> normal_sample(Rng& rng, std::size_t n, double mean = 0.0, double sd = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(mean, sd);
    return v;
}

// Profiles for `n` neighborhoods in `k` round-robin clusters.  Variables
// v0..v{shifted-1} move by `effect` standard deviations per cluster.
struct ScreenFixture {
    std::vector<CensusProfile> profiles;
    std::map<std::string, int> labels;
};

ScreenFixture screen_fixture(std::uint64_t seed, int vars, int shifted, double effect, int n = 24, int k = 3) {
    Rng rng(seed);
    ScreenFixture f;
    for (int i = 0; i < n; ++i) {
        CensusProfile p;
        p.neighborhood = "N" + std::to_string(100 + i);
        int c = i % k;
        f.labels[p.neighborhood] = c;
        for (int v = 0; v < vars; ++v) {
            double shift = v < shifted ? effect * c : 0.0;
            p.values["v" + std::to_string(v)] = rng.normal(shift, 1.0);
        }
        f.profiles.push_back(std::move(p));
    }
    return f;
}

// Step-up adjustment written directly from the definition.
std::vector<double> bh_oracle(const std::vector<double>& p) {
    std::size_t m = p.size();
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = 0; j < m; ++j) {
            if (p[j] < p[i]) continue;
            std::size_t rank = 0;
            for (double q : p) rank += q <= p[j];
            best = std::min(best, p[j] * static_cast<double>(m) / static_cast<double>(rank));
        }
        out[i] = best;
    }
    return out;
}

}  // namespace

TEST_SUITE("stats") {
    TEST_CASE("ANOVA hand instance") {
        auto r = anova_oneway({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
        CHECK(r.f == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(r.p == doctest::Approx(0.125).epsilon(1e-12));
        CHECK(r.df_between == 2);
        CHECK(r.df_within == 6);
    }

    TEST_CASE("ANOVA two groups is the squared pooled t") {
        auto r = anova_oneway({{1, 2, 3}, {4, 5, 6}});
        CHECK(r.f == doctest::Approx(13.5).epsilon(1e-12));
        auto t = pooled_t_test(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
        CHECK(t.statistic * t.statistic == doctest::Approx(13.5).epsilon(1e-12));
        Rng rng(31);
        for (int i = 0; i < 50; ++i) {
            auto a = normal_sample(rng, 3 + rng.index(10));
            auto b = normal_sample(rng, 3 + rng.index(10), rng.uniform(-1, 1));
            auto f = anova_oneway({a, b});
            auto tt = pooled_t_test(a, b);
            CHECK(std::abs(f.f - tt.statistic * tt.statistic) < 1e-9 * std::max(1.0, f.f));
            CHECK(std::abs(f.p - tt.p) < 1e-9);
        }
    }

    TEST_CASE("ANOVA matches a reference on a three-group sample") {
        auto r = anova_oneway({{4.1, 5.2, 6.3, 5.0, 4.8}, {6.9, 7.4, 8.1, 6.5, 7.7}, {5.5, 6.0, 4.9, 6.8, 5.9}});
        CHECK(r.f == doctest::Approx(12.803407601572744).epsilon(1e-10));
        CHECK(r.p == doctest::Approx(0.0010555726770130362).epsilon(1e-8));
        auto t = pooled_t_test(std::vector<double>{1, 2, 3, 4}, std::vector<double>{3, 5, 6, 7.5});
        CHECK(t.statistic == doctest::Approx(-2.5144997839225627).epsilon(1e-10));
        CHECK(t.p == doctest::Approx(0.04562489442260441).epsilon(1e-8));
    }

    TEST_CASE("ANOVA errors") {
        CHECK(code_of([] { anova_oneway({{5, 5}, {5, 5}}); }) == ErrorCode::DegenerateInput);
        CHECK(code_of([] { anova_oneway({{1, 2, 3}}); }) == ErrorCode::SampleTooSmall);
        CHECK(code_of([] { anova_oneway({{1, 2}, {3}}); }) == ErrorCode::SampleTooSmall);
    }

    TEST_CASE("ANOVA is invariant under shift and scale") {
        Rng rng(4);
        Groups g{normal_sample(rng, 6), normal_sample(rng, 7, 0.5), normal_sample(rng, 5, -0.3)};
        auto base = anova_oneway(g);
        for (double c : {-3.0, 0.01, 250.0}) {
            Groups h = g;
            for (auto& grp : h)
                for (auto& v : grp) v = c * v + 17.0;
            auto r = anova_oneway(h);
            CHECK(r.f == doctest::Approx(base.f).epsilon(1e-9));
            CHECK(r.p == doctest::Approx(base.p).epsilon(1e-9));
        }
    }

    TEST_CASE("Kruskal-Wallis") {
        auto r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
        CHECK(r.statistic == doctest::Approx(7.2).epsilon(1e-12));
        CHECK(r.p == doctest::Approx(0.02732372244729252).epsilon(1e-9));
        auto same = kruskal_wallis({{1, 2, 3}, {1, 2, 3}});
        CHECK(same.statistic == doctest::Approx(0.0));
        CHECK(same.p > 0.9);
        auto ties = kruskal_wallis({{1, 1, 2, 3}, {2, 3, 3, 5, 8}, {4, 4, 9}});
        CHECK(ties.statistic == doctest::Approx(6.217234169653523).epsilon(1e-10));
        CHECK(ties.p == doctest::Approx(0.04466267734646826).epsilon(1e-9));
        auto ref = kruskal_wallis({{4.1, 5.2, 6.3, 5.0, 4.8}, {6.9, 7.4, 8.1, 6.5, 7.7}, {5.5, 6.0, 4.9, 6.8, 5.9}});
        CHECK(ref.statistic == doctest::Approx(9.62).epsilon(1e-10));
        CHECK(ref.p == doctest::Approx(0.008147859697679966).epsilon(1e-9));
        CHECK(code_of([] { kruskal_wallis({{1, 2, 3}, {}}); }) == ErrorCode::SampleTooSmall);
        CHECK(code_of([] { kruskal_wallis({{4, 4}, {4, 4}}); }) == ErrorCode::AllValuesTied);
    }

    TEST_CASE("Kruskal-Wallis is invariant under monotone transforms") {
        Rng rng(8);
        for (int t = 0; t < 20; ++t) {
            Groups g{normal_sample(rng, 5), normal_sample(rng, 6, 0.7), normal_sample(rng, 4, 1.2)};
            auto base = kruskal_wallis(g);
            for (auto& grp : g)
                for (auto& v : grp) v = std::exp(3.0 * v) + 2.0;
            auto r = kruskal_wallis(g);
            CHECK(r.statistic == doctest::Approx(base.statistic).epsilon(1e-12));
        }
    }

    TEST_CASE("Shapiro-Wilk matches a reference") {
        std::vector<double> x{2.1, 3.4, 1.9, 5.6, 4.4, 3.8, 2.9, 4.1, 3.3, 6.2, 2.5, 3.7};
        auto r = normality(x);
        CHECK(r.statistic == doctest::Approx(0.9512196625593105).epsilon(1e-5));
        CHECK(r.p == doctest::Approx(0.6548797836615506).epsilon(1e-4));
        auto three = normality(std::vector<double>{1, 2, 4});
        CHECK(three.statistic == doctest::Approx(0.9642857142857142).epsilon(1e-9));
        CHECK(three.p == doctest::Approx(0.6368868450289689).epsilon(1e-6));
        CHECK(code_of([] { normality(std::vector<double>{1, 2}); }) == ErrorCode::SampleTooSmall);
        CHECK(code_of([] { normality(std::vector<double>{3, 3, 3, 3}); }) == ErrorCode::DegenerateInput);
    }

    TEST_CASE("Anderson-Darling adjusted statistic matches a reference") {
        std::vector<double> x{2.1, 3.4, 1.9, 5.6, 4.4, 3.8, 2.9, 4.1, 3.3, 6.2, 2.5, 3.7};
        auto r = normality(x, NormalityTest::anderson_darling);
        CHECK(r.statistic == doctest::Approx(0.26724655637802397).epsilon(1e-9));
        CHECK(r.p > 0.5);
        CHECK(parse_normality("anderson_darling") == NormalityTest::anderson_darling);
        CHECK(normality_name(NormalityTest::shapiro_wilk) == "shapiro_wilk");
    }

    TEST_CASE("normality Monte Carlo") {
        for (auto method : {NormalityTest::shapiro_wilk, NormalityTest::anderson_darling}) {
            Rng rng(2024);
            int pass = 0;
            for (int t = 0; t < 1000; ++t) pass += normality(normal_sample(rng, 50), method).p > 0.01;
            CHECK(pass >= 990);
            auto s = normal_sample(rng, 50);
            s[17] = 100.0;
            CHECK(normality(s, method).p < 0.001);
        }
    }

    TEST_CASE("normality p is monotone in the statistic") {
        Rng rng(12);
        std::vector<std::pair<double, double>> sw;
        for (int t = 0; t < 200; ++t) {
            auto s = normal_sample(rng, 20);
            for (auto& v : s) v = v * v * (t % 3);  // mix normal and skewed draws
            if (t % 3 == 0) s = normal_sample(rng, 20);
            auto r = normality(s);
            sw.emplace_back(r.statistic, r.p);
        }
        std::sort(sw.begin(), sw.end());
        for (std::size_t i = 1; i < sw.size(); ++i) CHECK(sw[i].second >= sw[i - 1].second - 1e-12);
    }

    TEST_CASE("homogeneity") {
        Groups g{{4.1, 5.2, 6.3, 5.0, 4.8}, {6.9, 7.4, 8.1, 6.5, 7.7}, {5.5, 6.0, 4.9, 6.8, 5.9}};
        auto bf = homogeneity(g);
        CHECK(bf.statistic == doctest::Approx(0.012578616352201422).epsilon(1e-9));
        CHECK(bf.p == doctest::Approx(0.9875131660185873).epsilon(1e-9));
        auto bt = homogeneity(g, HomogeneityTest::bartlett);
        CHECK(bt.statistic == doctest::Approx(0.19401444811837365).epsilon(1e-9));
        CHECK(bt.p == doctest::Approx(0.9075494499186503).epsilon(1e-9));

        for (auto method : {HomogeneityTest::brown_forsythe, HomogeneityTest::bartlett}) {
            auto same = homogeneity({{1, 4, 2, 8}, {8, 2, 4, 1}}, method);
            CHECK(same.statistic == doctest::Approx(0.0));
            CHECK(same.p >= 0.99);
            Rng rng(77);
            auto wide = homogeneity({normal_sample(rng, 50, 0, 1), normal_sample(rng, 50, 0, 10)}, method);
            CHECK(wide.p < 0.001);
            CHECK(code_of([&] { homogeneity({{2, 2, 2}, {5, 5}}, method); }) == ErrorCode::DegenerateInput);
        }
        CHECK(parse_homogeneity("bartlett") == HomogeneityTest::bartlett);
        CHECK_FALSE(parse_homogeneity("levene"));
    }

    TEST_CASE("Pearson") {
        std::vector<double> x{2.041, -2.556, 0.418, -0.568, -0.453, -0.216, -2.02, -0.232, -0.865, 3.323,
                              0.226, -0.353, -0.281, -0.668, -1.055, -0.391, 0.482, -0.239, 0.958, -0.2};
        std::vector<double> y{0.637, 0.779, 0.671, -0.676, -0.319, 0.476, 1.329, -0.339, -0.503, 1.999,
                              -0.819, -0.398, 0.798, 0.38, -0.225, 0.553, -2.684, 0.95, -0.672, -1.729};
        auto r = pearson(x, y);
        CHECK(std::abs(r.r - 0.08529112808506237) < 1e-10);
        CHECK(std::abs(r.p - 0.7206982477891948) < 1e-10);
        CHECK(r.n == 20);
        auto five = pearson(std::vector<double>{1.0, 2.0, 3.5, 4.0, 6.0}, std::vector<double>{2.0, 2.5, 5.0, 4.5, 7.5});
        CHECK(std::abs(five.r - 0.9792385133853676) < 1e-10);
        CHECK(std::abs(five.p - 0.003579846488645812) < 1e-10);

        std::vector<double> lin(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) lin[i] = 2 * x[i] + 1;
        CHECK(pearson(x, lin).r == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(code_of([&] { pearson(x, std::vector<double>(x.size(), 3.0)); }) == ErrorCode::ConstantInput);
        CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
        CHECK_THROWS_AS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2}), Error);
    }

    TEST_CASE("Benjamini-Hochberg") {
        std::vector<double> p{0.01, 0.04, 0.03, 0.2};
        auto adj = benjamini_hochberg(p);
        CHECK(adj[0] == doctest::Approx(0.04));
        CHECK(adj[1] == doctest::Approx(0.16 / 3));
        CHECK(adj[2] == doctest::Approx(0.16 / 3));
        CHECK(adj[3] == doctest::Approx(0.2));
        Rng rng(3);
        for (int t = 0; t < 50; ++t) {
            std::vector<double> q(1 + rng.index(15));
            for (auto& v : q) v = std::pow(rng.uniform(), 2.0);
            if (q.size() > 2) q[1] = q[0];
            auto a = benjamini_hochberg(q);
            auto o = bh_oracle(q);
            for (std::size_t i = 0; i < q.size(); ++i) {
                CHECK(a[i] == doctest::Approx(o[i]).epsilon(1e-12));
                CHECK(a[i] >= q[i] * (1 - 1e-15));
            }
        }
    }

    TEST_CASE("screening finds exactly the shifted variables") {
        auto f = screen_fixture(5, 10, 3, 5.0);
        // null variables carry the same value multiset in every cluster
        for (int v = 3; v < 10; ++v) {
            std::string id = "v" + std::to_string(v);
            for (std::size_t i = 0; i < f.profiles.size(); ++i) f.profiles[i].values[id] = f.profiles[i / 3 * 3].values[id];
        }
        auto res = screen(f.profiles, f.labels);
        REQUIRE(res.size() == 10);
        std::set<std::string> sig;
        for (const auto& r : res)
            if (r.significant) sig.insert(r.var_id);
        std::string got;
        for (const auto& v : sig) got += v + " ";
        CAPTURE(got);
        CHECK(sig == std::set<std::string>{"v0", "v1", "v2"});
        for (std::size_t i = 1; i < res.size(); ++i) CHECK(res[i - 1].p_value <= res[i].p_value);
        for (const auto& r : res) {
            CHECK(r.group_sizes == std::vector<std::size_t>{8, 8, 8});
            CHECK(r.p_adjusted == r.p_value);
            CHECK(r.significant == (r.p_value < 0.05));
            if (r.test_used == TestUsed::anova) {
                CHECK(r.homogeneity == Check::pass);
                for (auto c : r.normality) CHECK(c == Check::pass);
            }
        }
    }

    TEST_CASE("screening with BH is a subset of the uncorrected set") {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            auto f = screen_fixture(seed, 12, 4, 0.6);
            ScreeningConfig plain, bh;
            bh.correction = Correction::benjamini_hochberg;
            auto a = screen(f.profiles, f.labels, plain), b = screen(f.profiles, f.labels, bh);
            std::set<std::string> sa, sb;
            for (const auto& r : a)
                if (r.significant) sa.insert(r.var_id);
            for (const auto& r : b)
                if (r.significant) sb.insert(r.var_id);
            CHECK(std::includes(sa.begin(), sa.end(), sb.begin(), sb.end()));
        }
    }

    TEST_CASE("screening skip reasons and routing") {
        auto f = screen_fixture(9, 2, 0, 0.0, 9, 3);
        for (auto& p : f.profiles) {
            p.values["const"] = 4.0;
            p.values["gone"] = std::nullopt;
        }
        // v1 keeps a single value in cluster 0
        for (auto& p : f.profiles)
            if (f.labels[p.neighborhood] == 0 && p.neighborhood != "N100") p.values["v1"] = std::nullopt;
        // heavy outlier breaks normality of cluster 1 on v0
        f.profiles[1].values["v0"] = 1e6;
        auto res = screen(f.profiles, f.labels);
        std::map<std::string, VariableTestResult> by;
        for (auto& r : res) by[r.var_id] = r;
        CHECK(by["const"].test_used == TestUsed::skipped);
        CHECK(by["const"].skip_reason == "DEGENERATE_INPUT");
        CHECK(by["gone"].skip_reason == "EMPTY_INPUT");
        CHECK(by["v1"].skip_reason == "SAMPLE_TOO_SMALL");
        CHECK(by["v1"].group_sizes == std::vector<std::size_t>{1, 3, 3});
        CHECK(by["v0"].test_used == TestUsed::kruskal_wallis);
        CHECK(res.back().test_used == TestUsed::skipped);
        CHECK(by["const"].flags() == "skipped=DEGENERATE_INPUT");
        CHECK(by["v0"].flags().rfind("homog=", 0) == 0);

        auto g = screen_fixture(9, 1, 0, 0.0, 8, 4);  // groups of 2 cannot be tested for normality
        auto r2 = screen(g.profiles, g.labels);
        CHECK(r2[0].test_used == TestUsed::kruskal_wallis);
        for (auto c : r2[0].normality) CHECK(c == Check::untestable);
    }

    TEST_CASE("screening errors and config") {
        auto f = screen_fixture(1, 2, 0, 0.0);
        f.labels["N999"] = 1;
        CHECK(code_of([&] { screen(f.profiles, f.labels); }) == ErrorCode::LabelWithoutProfile);
        ScreeningConfig c;
        c.alpha = 1.0;
        CHECK_THROWS_AS(c.validate(), Error);
        c.alpha = 0.0;
        CHECK_THROWS_AS(c.validate(), Error);
        CHECK(parse_correction("benjamini_hochberg") == Correction::benjamini_hochberg);
        CHECK(correction_name(Correction::none) == "none");
        CHECK(test_name(TestUsed::kruskal_wallis) == "kruskal_wallis");
    }

    TEST_CASE("screening result is independent of profile order") {
        auto f = screen_fixture(13, 8, 2, 1.0);
        auto a = screen(f.profiles, f.labels);
        std::reverse(f.profiles.begin(), f.profiles.end());
        auto b = screen(f.profiles, f.labels);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].var_id == b[i].var_id);
            CHECK(a[i].p_value == b[i].p_value);
        }
    }
}
