#include "vulnscape/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>

#include "vulnscape/csv.hpp"
#include "vulnscape/io.hpp"
#include "vulnscape/rng.hpp"

namespace vulnscape::synthetic {

namespace {

std::string two_digits(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    return buf;
}

double clamp_percent(double v) { return std::clamp(v, 0.0, 100.0); }

double round_to(double v, double step) { return std::round(v / step) * step; }

}  // namespace

std::vector<NeighborhoodId> neighborhood_ids(int count) {
    std::vector<NeighborhoodId> out;
    for (int i = 1; i <= count; ++i) out.push_back({"N" + two_digits(i), "Neighborhood " + two_digits(i)});
    return out;
}

EdiFixture edi_blobs(std::uint64_t seed, const EdiOptions& options) {
    Rng rng(stage_seed(seed, "edi"));
    EdiFixture out;
    auto ids = neighborhood_ids(options.neighborhoods);
    for (int i = 0; i < options.neighborhoods; ++i) out.truth[ids[i].id] = i % options.blobs;
    for (int wave = Wave::kFirst; wave <= Wave::kLast; ++wave) {
        for (int i = 0; i < options.neighborhoods; ++i) {
            EdiRecord r;
            r.neighborhood = ids[i];
            r.wave = Wave(wave);
            r.n_children = 80 + static_cast<long>(rng.index(400));
            const double center = 6.0 + options.center_step * (i % options.blobs);
            double sum = 0.0;
            for (std::size_t s = 0; s < kDomainScaleCount; ++s) {
                r.percent[s] = round_to(clamp_percent(rng.normal(center, options.spread)), 0.01);
                sum += r.percent[s];
            }
            double one = round_to(clamp_percent(1.9 * sum / kDomainScaleCount + rng.normal(0.0, 1.0)), 0.01);
            r.value(Scale::one_or_more) = one;
            r.value(Scale::two_or_more) = round_to(one * (0.45 + 0.1 * rng.uniform()), 0.01);
            out.records.push_back(r);
        }
    }
    return out;
}

CensusFixture census_map(const std::map<std::string, int>& truth, std::uint64_t seed) {
    Rng rng(stage_seed(seed, "census"));
    CensusFixture out;
    out.catalog = Catalog({
        {"population", "Population", CensusCategory::Geography, CensusKind::count, "", ""},
        {"households", "Households", CensusCategory::Geography, CensusKind::count, "", ""},
        {"shape_area", "Shape Area", CensusCategory::Geography, CensusKind::count, "", ""},
        {"owners", "Owners", CensusCategory::Population, CensusKind::count, "", ""},
        {"renters", "Renters", CensusCategory::Population, CensusKind::count, "", ""},
        {"renter_per_owner_ratio", "Renter/Owner Ratio", CensusCategory::Population, CensusKind::ratio, "renters", "owners"},
        {"lone_parent_pct", "Lone Parent (% of census families)", CensusCategory::Population, CensusKind::percent, "", ""},
        {"household_income_median", "Total Income of Households in 2015 (Median)", CensusCategory::Income,
         CensusKind::median, "", ""},
        {"unemployment_rate", "Unemployment Rate", CensusCategory::Employment, CensusKind::rate, "", ""},
        {"immigrants_pct", "Immigrants (%)", CensusCategory::LanguageImmigration, CensusKind::percent, "", ""},
        {"rooms_per_dwelling_mean", "Rooms per Dwelling (Mean)", CensusCategory::CostOfLiving, CensusKind::mean, "", ""},
        {"transit_pct", "Employed that Use Transit (% of employed population)", CensusCategory::Employment,
         CensusKind::percent, "", ""},
    });
    for (const auto& v : out.catalog.variables()) out.table.var_ids.push_back(v.var_id);

    constexpr double kCell = 0.05;
    constexpr double kLon0 = -122.90;
    constexpr double kLat0 = 49.00;
    auto square = [](double x0, double y0, double size) {
        geo::Polygon p;
        p.exterior = {{x0, y0}, {x0 + size, y0}, {x0 + size, y0 + size}, {x0, y0 + size}, {x0, y0}};
        return geo::Region{p};
    };
    auto add_da = [&](const std::string& id, double x0, double y0, int blob) {
        out.da_geometry[id] = square(x0, y0, kCell / 3.0);
        double population = 300.0 + static_cast<double>(rng.index(600));
        double households = std::round(population / (2.6 + 0.4 * rng.uniform()));
        double owners = std::round(households * (0.55 + 0.3 * rng.uniform()));
        std::vector<std::optional<double>> row{
            population,
            households,
            round_to(std::pow(kCell / 3.0, 2) * 1.0e4, 0.001),
            owners,
            households - owners,
            std::nullopt,
            round_to(10.0 + 4.0 * blob + rng.normal(0.0, 1.0), 0.01),
            std::round(95000.0 - 15000.0 * blob + rng.normal(0.0, 3000.0)),
            round_to(4.0 + 2.5 * blob + rng.normal(0.0, 0.6), 0.01),
            round_to(35.0 + rng.normal(0.0, 6.0), 0.01),
            round_to(6.0 + rng.normal(0.0, 0.5), 0.01),
            round_to(12.0 + rng.normal(0.0, 3.0), 0.01),
        };
        row[5] = round_to(*row[4] / *row[3], 1e-4);
        out.table.da_ids.push_back(id);
        out.table.values.push_back(std::move(row));
    };

    int index = 0;
    for (const auto& [nbhd, blob] : truth) {
        double x0 = kLon0 + kCell * (index % 6);
        double y0 = kLat0 + kCell * (index / 6);
        out.neighborhood_geometry[nbhd] = square(x0, y0, kCell);
        for (int sub = 0; sub < 9; ++sub) {
            add_da(nbhd + "-" + std::to_string(sub + 1), x0 + kCell / 3.0 * (sub % 3), y0 + kCell / 3.0 * (sub / 3), blob);
        }
        ++index;
    }
    add_da("X-1", kLon0 - kCell, kLat0 - kCell, 1);
    add_da("X-2", kLon0 + 7 * kCell, kLat0, 1);
    return out;
}

std::vector<RegistrationRecord> registrations(std::uint64_t seed, const std::vector<std::string>& neighborhoods,
                                              std::size_t count) {
    static const char* const kCourses[][2] = {
        {"Summer Day Camp", "Ages 6-8"},          {"Parent & Tot Playtime", "With caregiver"},
        {"Swim Lessons Level 1", "Preschool"},    {"Swim Lessons Level 3", "Youth"},
        {"Intro to Ballet", "Beginner"},          {"Kids Piano", "Group lesson"},
        {"Soccer Skills", "U8"},                  {"Learn to Skate", "Level 2"},
        {"Creative Painting", "Mixed media"},     {"Kids Cooking Club", "Healthy snacks"},
        {"Nature Explorers", "Forest walks"},     {"Lego Builders", "Engineering play"},
        {"Computer Basics", "Keyboarding"},       {"Social Recreation Night", "Drop-in"},
    };
    constexpr std::size_t kCourseCount = sizeof kCourses / sizeof kCourses[0];
    Rng rng(stage_seed(seed, "registrations"));

    auto season_of = [](unsigned month) {
        if (month <= 3) return Season::Winter;
        if (month <= 6) return Season::Spring;
        if (month <= 8) return Season::Summer;
        return Season::Fall;
    };
    auto add_days = [](const Date& d, int days) {
        auto sd = std::chrono::sys_days(std::chrono::year_month_day{std::chrono::year{d.year()}, std::chrono::month{d.month()},
                                                                    std::chrono::day{d.day()}}) +
                  std::chrono::days{days};
        std::chrono::year_month_day ymd{sd};
        return Date(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    };

    std::vector<RegistrationRecord> out;
    int client = 0;
    while (out.size() < count) {
        ++client;
        char id[16];
        std::snprintf(id, sizeof id, "C%04d", client);
        Date birth(2003 + static_cast<int>(rng.index(8)), 1 + static_cast<unsigned>(rng.index(12)),
                   1 + static_cast<unsigned>(rng.index(28)));
        if (rng.uniform() < 0.04) birth = Date(1998 + static_cast<int>(rng.index(2)), 5, 5);
        Date account = add_days(birth, 365 * 2 + static_cast<int>(rng.index(300)));
        if (rng.uniform() < 0.03) account = Date(1999, 11, 1);
        Gender gender = rng.uniform() < 0.5 ? Gender::male : Gender::female;
        if (rng.uniform() < 0.05) gender = Gender::unspecified;
        std::optional<std::string> nbhd = neighborhoods[rng.index(neighborhoods.size())];
        if (rng.uniform() < 0.04) nbhd.reset();

        double u = rng.uniform();
        int exit_age = u < 0.8 ? 7 + static_cast<int>(rng.index(3)) : 10 + static_cast<int>(rng.index(4));
        int entry_age = 3 + static_cast<int>(rng.index(4));
        std::size_t regs = 1 + rng.index(5);
        for (std::size_t r = 0; r < regs && out.size() < count; ++r) {
            int age = regs == 1 ? entry_age
                                : entry_age + static_cast<int>(std::lround(static_cast<double>(exit_age - entry_age) *
                                                                           static_cast<double>(r) /
                                                                           static_cast<double>(regs - 1)));
            Date date = add_days(birth, 365 * age + 30 + static_cast<int>(rng.index(300)));
            const auto* course = kCourses[rng.index(kCourseCount)];
            RegistrationRecord rec;
            rec.client_id = id;
            rec.birth_date = birth;
            rec.gender = gender;
            rec.neighborhood = nbhd;
            rec.account_created = account;
            char rid[16];
            std::snprintf(rid, sizeof rid, "R%05zu", out.size() + 1);
            rec.registration_id = rid;
            rec.course_id = "K" + two_digits(static_cast<int>(course - kCourses[0]) / 2 + 1);
            rec.course_title = course[0];
            rec.course_subtitle = course[1];
            rec.registration_date = date;
            rec.season = season_of(date.month());
            rec.completed = rng.uniform() > 0.05;
            rec.max_registrants = rng.uniform() < 0.03 ? 1 : 8 + static_cast<long>(rng.index(20));
            rec.subsidized = rng.uniform() < 0.15;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::string to_geojson(const geo::GeometrySet& geometry) {
    using nlohmann::json;
    auto ring_json = [](const geo::Ring& ring) {
        json r = json::array();
        for (const auto& p : ring) r.push_back({p.x, p.y});
        return r;
    };
    json features = json::array();
    for (const auto& [id, region] : geometry) {
        json polys = json::array();
        for (const auto& poly : region) {
            json rings = json::array({ring_json(poly.exterior)});
            for (const auto& hole : poly.holes) rings.push_back(ring_json(hole));
            polys.push_back(rings);
        }
        json geom = polys.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                      : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
        features.push_back({{"type", "Feature"}, {"properties", {{"id", id}}}, {"geometry", geom}});
    }
    return json{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n";
}

void write_data_dir(const std::filesystem::path& dir, std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    auto edi = edi_blobs(seed);
    auto census = census_map(edi.truth, seed);
    std::vector<std::string> ids;
    for (const auto& [id, blob] : edi.truth) ids.push_back(id);
    csv::write_text(dir / "edi.csv", serialize_edi(edi.records));
    csv::write_text(dir / "census_catalog.csv", serialize_catalog(census.catalog));
    csv::write_text(dir / "census_da.csv", serialize_da_table(census.table));
    csv::write_text(dir / "da_geometry.geojson", to_geojson(census.da_geometry));
    csv::write_text(dir / "neighborhoods.geojson", to_geojson(census.neighborhood_geometry));
    csv::write_text(dir / "registrations.csv", serialize_registrations(registrations(seed, ids)));
}

}  // namespace vulnscape::synthetic
