#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "support.hpp"
#include "vulnscape/csv.hpp"
#include "vulnscape/error.hpp"
#include "vulnscape/retention.hpp"
#include "vulnscape/rng.hpp"
#include "vulnscape/stats.hpp"
#include "vulnscape/synthetic.hpp"

using namespace vulnscape;
using namespace vulnscape::retention;

namespace {

RegistrationRecord record(std::string client, Date birth, Date when, std::string title = "Swim Lessons Level 1",
                          std::string reg_id = "") {
    RegistrationRecord r;
    r.client_id = std::move(client);
    r.birth_date = birth;
    r.gender = Gender::female;
    r.neighborhood = "N01";
    r.account_created = Date(2005, 1, 1);
    r.registration_id = reg_id.empty() ? r.client_id + "-" + when.iso() : std::move(reg_id);
    r.course_id = "C1";
    r.course_title = std::move(title);
    r.season = Season::Fall;
    r.registration_date = when;
    r.completed = true;
    r.max_registrants = 10;
    return r;
}

double total(const Distribution& d) {
    double s = 0;
    for (const auto& r : d.rows) s += r.proportion;
    return s;
}

}  // namespace

TEST_SUITE("retention") {
    TEST_CASE("filters label the first failing rule") {
        Date b(2008, 3, 1), w(2015, 1, 10);
        auto ok = record("a", b, w);
        auto early_account = ok;
        early_account.account_created = Date(2000, 1, 1);
        early_account.birth_date = Date(1999, 5, 5);  // both rules fail; account comes first
        auto old_birth = ok;
        old_birth.birth_date = Date(1999, 5, 5);
        auto single = ok;
        single.max_registrants = 1;
        auto unfinished = ok;
        unfinished.completed = false;
        auto res = apply_filters({ok, early_account, old_birth, single, unfinished});
        REQUIRE(res.kept.size() == 1);
        CHECK(res.kept[0] == ok);
        REQUIRE(res.rejected.size() == 4);
        CHECK(res.rejected[0].reason == RejectReason::account_created);
        CHECK(res.rejected[1].reason == RejectReason::birth_date);
        CHECK(res.rejected[2].reason == RejectReason::max_registrants);
        CHECK(res.rejected[3].reason == RejectReason::not_completed);
        CHECK(reason_name(RejectReason::birth_date) == "birth_date");

        // cutoffs are strict
        auto edge = ok;
        edge.birth_date = Date(2000, 1, 1);
        CHECK(apply_filters({edge}).rejected.size() == 1);
        edge.birth_date = Date(2000, 1, 2);
        CHECK(apply_filters({edge}).kept.size() == 1);

        FilterPolicy loose;
        loose.require_completed = false;
        CHECK(apply_filters({unfinished}, loose).kept.size() == 1);
    }

    TEST_CASE("filters partition the input") {
        auto recs = synthetic::registrations(3, {"N01", "N02", "N03"}, 400);
        auto res = apply_filters(recs);
        CHECK(res.kept.size() + res.rejected.size() == recs.size());
        std::vector<std::string> ids;
        for (const auto& r : res.kept) ids.push_back(r.registration_id);
        for (const auto& r : res.rejected) ids.push_back(r.record.registration_id);
        std::vector<std::string> orig;
        for (const auto& r : recs) orig.push_back(r.registration_id);
        std::sort(ids.begin(), ids.end());
        std::sort(orig.begin(), orig.end());
        CHECK(ids == orig);
        std::set<RejectReason> seen;
        for (const auto& r : res.rejected) seen.insert(r.reason);
        CHECK(seen.size() == 4);
    }

    TEST_CASE("classification") {
        auto rules = GroupingRules::defaults();
        CHECK(rules.classify("Swim Lessons Level 1", "") == "Aquatics");
        CHECK(rules.classify("Lego Robotics Club", "") == "General Activities");
        CHECK(rules.classify("SPRING BREAK CAMP", "swim day") == "Day Camps");
        CHECK(rules.groups().size() == kGroupCount);

        auto custom = GroupingRules::parse("pattern,group\nswim,Aquatics\nswim,Sports\na,B\nc,D\ne,F\ng,H\ni,J\n");
        CHECK(custom.classify("swim", "") == "Aquatics");
        auto both = GroupingRules::parse("pattern,group\nart&cook,Arts\nart,Other\nx,X\ny,Y\nz,Z\nw,W\nv,V\n");
        CHECK(both.classify("Kids Art", "and Cooking") == "Arts");
        CHECK(both.classify("Kids Art", "") == "Other");
        CHECK_THROWS_AS(GroupingRules::parse("pattern,group\nswim,Aquatics\n"), Error);
        CHECK_THROWS_AS(GroupingRules::parse("pattern,group\n,Aquatics\n"), Error);
    }

    TEST_CASE("shipped rules file equals the built-in defaults") {
        auto path = testing::source_dir() / "data" / "program_groups.csv";
        auto loaded = GroupingRules::load(path);
        CHECK(loaded.serialize() == GroupingRules::defaults().serialize());
        CHECK(GroupingRules::parse(loaded.serialize()).serialize() == loaded.serialize());
    }

    TEST_CASE("journeys: ages, span and tie order") {
        Date birth(2005, 6, 15);
        std::vector<RegistrationRecord> regs{
            record("c1", birth, Date(2014, 9, 1), "Ballet"),
            record("c1", birth, Date(2009, 7, 1), "Swim"),
            record("c1", birth, Date(2011, 6, 14), "Soccer"),
            record("c2", birth, Date(2012, 3, 3), "Piano", "r-b"),
            record("c2", birth, Date(2012, 3, 3), "Swim", "r-a"),
        };
        auto js = build_journeys(regs, GroupingRules::defaults());
        REQUIRE(js.size() == 2);
        CHECK(js[0].client_id == "c1");
        CHECK(js[0].entry_age == 4);
        CHECK(js[0].exit_age == 9);
        CHECK(js[0].span_years == 5);
        CHECK(js[0].entry_group == "Aquatics");
        CHECK(js[0].exit_group == "Music/Dance/Theatre");
        CHECK(js[0].groups.size() == 3);
        CHECK(js[0].registrations[1].course_title == "Soccer");
        CHECK(js[1].entry_age == js[1].exit_age);
        CHECK(js[1].span_years == 0);
        CHECK(js[1].registrations[0].registration_id == "r-a");
        CHECK(js[1].entry_group == "Aquatics");
    }

    TEST_CASE("journeys are invariant under record shuffling") {
        auto recs = apply_filters(synthetic::registrations(11, {"N01", "N02"}, 300)).kept;
        auto rules = GroupingRules::defaults();
        auto base = build_journeys(recs, rules);
        Rng rng(4);
        for (int t = 0; t < 5; ++t) {
            for (std::size_t i = recs.size(); i > 1; --i) std::swap(recs[i - 1], recs[rng.index(i)]);
            auto js = build_journeys(recs, rules);
            REQUIRE(js.size() == base.size());
            for (std::size_t i = 0; i < js.size(); ++i) {
                CHECK(js[i].client_id == base[i].client_id);
                CHECK(js[i].registrations == base[i].registrations);
                CHECK(js[i].exit_age == base[i].exit_age);
            }
        }
        for (const auto& j : base) {
            CHECK(j.entry_age <= j.exit_age);
            CHECK(j.span_years >= 0);
        }
    }

    TEST_CASE("distributions sum to one and conserve counts") {
        auto js = build_journeys(apply_filters(synthetic::registrations(5, {"N01", "N02", "N03"}, 500)).kept,
                                 GroupingRules::defaults());
        for (Facet f : kAllFacets) {
            auto d = distributions(js, f);
            long count = 0;
            for (const auto& r : d.rows) count += r.count;
            CHECK(count == static_cast<long>(js.size()));
            if (f != Facet::span) CHECK(std::abs(total(d) - 1.0) < 1e-9);
            CHECK(parse_facet(facet_name(f)) == f);
            auto t = d.to_table();
            CHECK(t.rows.size() == d.rows.size());
            CHECK(t.header.back() == "proportion");
        }
        // span is normalized within each exit group
        auto span = distributions(js, Facet::span);
        std::map<std::string, double> per;
        for (const auto& r : span.rows) per[r.key[0]] += r.proportion;
        for (const auto& [g, s] : per) CHECK(std::abs(s - 1.0) < 1e-9);

        auto exit = distributions(js, Facet::exit_age);
        auto mode = std::max_element(exit.rows.begin(), exit.rows.end(),
                                     [](const DistributionRow& a, const DistributionRow& b) { return a.count < b.count; });
        int modal = std::stoi(mode->key[0]);
        CHECK((modal >= 7 && modal <= 9));
        CHECK_THROWS_AS(distributions({}, Facet::entry_age), Error);
    }

    TEST_CASE("neighborhood share") {
        Date b(2008, 1, 5);
        auto r1 = record("a", b, Date(2014, 2, 2)), r2 = record("b", b, Date(2014, 2, 2));
        auto r3 = record("c", b, Date(2014, 2, 2)), r4 = record("d", b, Date(2014, 2, 2));
        r3.neighborhood = "N02";
        r4.neighborhood = std::nullopt;
        auto d = distributions(build_journeys({r1, r2, r3, r4}, GroupingRules::defaults()), Facet::neighborhood_share);
        std::map<std::string, double> share;
        for (const auto& r : d.rows) share[r.key[0]] = r.proportion;
        CHECK(share["N01"] == 0.5);
        CHECK(share["N02"] == 0.25);
        CHECK(share["unassigned"] == 0.25);
    }

    TEST_CASE("General Activities span share is exactly 0.40") {
        std::vector<RegistrationRecord> regs;
        Date birth(2003, 2, 2);
        for (int i = 0; i < 10; ++i) {
            std::string id = "g" + std::to_string(i);
            int span = i < 4 ? 7 + i % 2 : i % 5;
            regs.push_back(record(id, birth, Date(2006, 5, 5), "Lego Club"));
            regs.push_back(record(id, birth, Date(2006 + span, 5, 6), "Board Games"));
        }
        for (int i = 0; i < 5; ++i) {  // long Aquatics journeys must not leak into the share
            std::string id = "s" + std::to_string(i);
            regs.push_back(record(id, birth, Date(2005, 5, 5), "Swim"));
            regs.push_back(record(id, birth, Date(2015, 5, 5), "Swim"));
        }
        auto d = distributions(build_journeys(regs, GroupingRules::defaults()), Facet::span);
        double long_share = 0;
        for (const auto& r : d.rows)
            if (r.key[0] == "General Activities" && std::stoi(r.key[1]) >= 7) long_share += r.proportion;
        CHECK(long_share == doctest::Approx(0.40).epsilon(1e-12));
    }

    TEST_CASE("enrollment rates") {
        Date b(2008, 1, 5);
        std::vector<RegistrationRecord> regs;
        for (int i = 0; i < 5; ++i) regs.push_back(record("k" + std::to_string(i), b, Date(2014, 2, 2), "Lego Club"));
        regs.push_back(record("k0", b, Date(2015, 2, 2), "Chess"));  // same client twice
        auto other = record("z", b, Date(2014, 2, 2), "Swim");
        other.neighborhood = "N02";
        regs.push_back(other);
        auto js = build_journeys(regs, GroupingRules::defaults());
        auto rates = enrollment_rates(js, kDefaultGroup, {"N01", "N02"}, {{"N01", 100}, {"N02", 40}});
        REQUIRE(rates.size() == 2);
        CHECK(rates[0].clients == 5);
        CHECK(rates[0].rate == doctest::Approx(0.05));
        CHECK(rates[1].clients == 0);
        CHECK(rates[1].rate == 0.0);
        auto t = rates_table(rates);
        CHECK(t.rows[0] == csv::Row{"N01", "5", "100", "0.05"});
        try {
            enrollment_rates(js, kDefaultGroup, {"N01", "N03"}, {{"N01", 100}});
            FAIL("expected MissingPopulation");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::MissingPopulation);
        }
    }

    TEST_CASE("rates built with zero covariance show no correlation") {
        // 12 mirrored pairs of EDI scores; both members of a pair get the same
        // client count, so the sample covariance vanishes for any shuffle.
        Rng rng(17);
        int small = 0;
        const int trials = 200;
        for (int t = 0; t < trials; ++t) {
            std::vector<std::string> nbhds;
            std::map<std::string, long> pop;
            std::vector<double> edi;
            std::vector<int> counts(12);
            std::iota(counts.begin(), counts.end(), 1);
            for (std::size_t i = counts.size(); i > 1; --i) std::swap(counts[i - 1], counts[rng.index(i)]);
            std::vector<RegistrationRecord> regs;
            Date b(2009, 1, 1);
            for (int p = 0; p < 12; ++p) {
                double d = rng.uniform(0.5, 10.0);
                for (int side = 0; side < 2; ++side) {
                    std::string id = "N" + std::to_string(p * 2 + side);
                    nbhds.push_back(id);
                    pop[id] = 200;
                    edi.push_back(30.0 + (side ? d : -d));
                    for (int c = 0; c < counts[static_cast<std::size_t>(p)]; ++c) {
                        auto r = record(id + "-" + std::to_string(c), b, Date(2015, 3, 3), "Lego");
                        r.neighborhood = id;
                        regs.push_back(r);
                    }
                }
            }
            auto rates = enrollment_rates(build_journeys(regs, GroupingRules::defaults()), kDefaultGroup, nbhds, pop);
            std::vector<double> rv;
            for (const auto& r : rates) rv.push_back(r.rate);
            small += std::abs(stats::pearson(edi, rv).r) < 0.2;
        }
        CHECK(small >= trials * 95 / 100);
    }

    TEST_CASE("independently shuffled rates give a calibrated Pearson test") {
        Rng rng(23);
        std::vector<double> edi(24), rate(24);
        for (auto& v : edi) v = rng.uniform(10, 40);
        for (auto& v : rate) v = rng.uniform(0.0, 0.2);
        int rejections = 0;
        const int trials = 2000;
        for (int t = 0; t < trials; ++t) {
            for (std::size_t i = rate.size(); i > 1; --i) std::swap(rate[i - 1], rate[rng.index(i)]);
            rejections += stats::pearson(edi, rate).p < 0.05;
        }
        double fpr = static_cast<double>(rejections) / trials;
        CHECK(std::abs(fpr - 0.05) < 3 * std::sqrt(0.05 * 0.95 / trials));
    }

    TEST_CASE("tables") {
        auto recs = synthetic::registrations(2, {"N01"}, 120);
        auto f = apply_filters(recs);
        auto rej = rejections_table(f.rejected);
        CHECK(rej.header == csv::Row{"client_id", "registration_id", "reason"});
        CHECK(rej.rows.size() == f.rejected.size());
        auto js = build_journeys(f.kept, GroupingRules::defaults());
        auto jt = journeys_table(js);
        CHECK(jt.rows.size() == js.size());
        CHECK(jt.column("span_years").has_value());
    }
}
