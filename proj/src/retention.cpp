#include "vulnscape/retention.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>

#include "vulnscape/error.hpp"
#include "vulnscape/parallel.hpp"

namespace vulnscape::retention {

namespace {

constexpr std::string_view kDefaultRules = R"csv(pattern,group
camp,Day Camps
parent,Parent Participation
caregiver,Parent Participation
family,Parent Participation
tot&adult,Parent Participation
swim,Aquatics
aqua,Aquatics
lifeguard,Aquatics
diving,Aquatics
water polo,Aquatics
music,Music/Dance/Theatre
piano,Music/Dance/Theatre
guitar,Music/Dance/Theatre
violin,Music/Dance/Theatre
choir,Music/Dance/Theatre
singing,Music/Dance/Theatre
dance,Music/Dance/Theatre
ballet,Music/Dance/Theatre
hip hop,Music/Dance/Theatre
theatre,Music/Dance/Theatre
drama,Music/Dance/Theatre
acting,Music/Dance/Theatre
soccer,Sports & Fitness
basketball,Sports & Fitness
hockey,Sports & Fitness
skating,Sports & Fitness
gymnastics,Sports & Fitness
martial,Sports & Fitness
karate,Sports & Fitness
taekwondo,Sports & Fitness
tennis,Sports & Fitness
badminton,Sports & Fitness
volleyball,Sports & Fitness
sport,Sports & Fitness
fitness,Sports & Fitness
yoga,Sports & Fitness
paint,Arts & Cooking
drawing,Arts & Cooking
pottery,Arts & Cooking
craft,Arts & Cooking
arts,Arts & Cooking
cook,Arts & Cooking
baking,Arts & Cooking
chef,Arts & Cooking
nature,Outdoor Education
outdoor,Outdoor Education
hiking,Outdoor Education
garden,Outdoor Education
forest,Outdoor Education
computer,General Activities
babysitting,General Activities
leadership,General Activities
)csv";

std::string lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> split_terms(const std::string& pattern) {
    std::vector<std::string> terms;
    std::size_t start = 0;
    while (true) {
        std::size_t amp = pattern.find('&', start);
        std::string term = lower(pattern.substr(start, amp == std::string::npos ? std::string::npos : amp - start));
        if (!term.empty()) terms.push_back(term);
        if (amp == std::string::npos) break;
        start = amp + 1;
    }
    return terms;
}

std::optional<long> as_int(const std::string& s) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Integers compare numerically, seasons in calendar order, the rest lexically.
bool key_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
        if (a[i] == b[i]) continue;
        auto ia = as_int(a[i]), ib = as_int(b[i]);
        if (ia && ib) return *ia < *ib;
        auto sa = parse_season(a[i]), sb = parse_season(b[i]);
        if (sa && sb) return *sa < *sb;
        return a[i] < b[i];
    }
    return a.size() < b.size();
}

}  // namespace

std::string_view reason_name(RejectReason r) noexcept {
    switch (r) {
        case RejectReason::account_created: return "account_created";
        case RejectReason::birth_date: return "birth_date";
        case RejectReason::max_registrants: return "max_registrants";
        case RejectReason::not_completed: return "not_completed";
    }
    return "";
}

FilterResult apply_filters(const std::vector<RegistrationRecord>& records, const FilterPolicy& policy) {
    FilterResult out;
    for (const auto& r : records) {
        std::optional<RejectReason> reason;
        if (!(r.account_created > policy.min_account_created)) {
            reason = RejectReason::account_created;
        } else if (!(r.birth_date > policy.min_birth_date)) {
            reason = RejectReason::birth_date;
        } else if (!(r.max_registrants > policy.min_max_registrants_exclusive)) {
            reason = RejectReason::max_registrants;
        } else if (policy.require_completed && !r.completed) {
            reason = RejectReason::not_completed;
        }
        if (reason) {
            out.rejected.push_back({r, *reason});
        } else {
            out.kept.push_back(r);
        }
    }
    return out;
}

GroupingRules::GroupingRules(std::vector<Rule> rules, std::string default_group)
    : rules_(std::move(rules)), default_group_(std::move(default_group)) {
    if (default_group_.empty()) throw Error(ErrorCode::InvalidArgument, "default group is empty");
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        auto terms = split_terms(rules_[i].pattern);
        if (terms.empty()) throw RowError(ErrorCode::InvalidArgument, i + 2, "pattern", "rule has an empty pattern");
        if (rules_[i].group.empty()) throw RowError(ErrorCode::InvalidArgument, i + 2, "group", "rule has an empty group");
        terms_.push_back(std::move(terms));
    }
}

GroupingRules GroupingRules::defaults() { return parse(kDefaultRules); }

GroupingRules GroupingRules::parse(std::string_view text) {
    auto table = csv::parse(text);
    auto pattern_col = table.require("pattern");
    auto group_col = table.require("group");
    std::vector<Rule> rules;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != table.header.size()) {
            throw RowError(ErrorCode::Parse, table.line_of[i], "", "expected " + std::to_string(table.header.size()) + " fields");
        }
        rules.push_back({row[pattern_col], row[group_col]});
    }
    GroupingRules out(std::move(rules));
    auto groups = out.groups();
    if (groups.size() != kGroupCount) {
        throw Error(ErrorCode::InvalidArgument, "rules reach " + std::to_string(groups.size()) + " groups, expected " +
                                                    std::to_string(kGroupCount));
    }
    return out;
}

GroupingRules GroupingRules::load(const std::filesystem::path& path) { return parse(csv::read_text(path)); }

std::string GroupingRules::serialize() const {
    csv::Table table;
    table.header = {"pattern", "group"};
    for (const auto& r : rules_) table.rows.push_back({r.pattern, r.group});
    return csv::to_string(table);
}

const std::string& GroupingRules::classify(std::string_view title, std::string_view subtitle) const {
    std::string text = lower(title) + " " + lower(subtitle);
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        bool all = std::all_of(terms_[i].begin(), terms_[i].end(),
                               [&](const std::string& t) { return text.find(t) != std::string::npos; });
        if (all) return rules_[i].group;
    }
    return default_group_;
}

std::vector<std::string> GroupingRules::groups() const {
    std::set<std::string> names{default_group_};
    for (const auto& r : rules_) names.insert(r.group);
    return {names.begin(), names.end()};
}

std::vector<ClientJourney> build_journeys(const std::vector<RegistrationRecord>& kept, const GroupingRules& rules) {
    std::map<std::string, std::vector<RegistrationRecord>> by_client;
    for (const auto& r : kept) by_client[r.client_id].push_back(r);
    std::vector<std::vector<RegistrationRecord>*> buckets;
    for (auto& [id, regs] : by_client) buckets.push_back(&regs);

    std::vector<ClientJourney> out(buckets.size());
    parallel_for(buckets.size(), [&](std::size_t i) {
        auto& regs = *buckets[i];
        std::sort(regs.begin(), regs.end(), [](const RegistrationRecord& a, const RegistrationRecord& b) {
            if (a.registration_date != b.registration_date) return a.registration_date < b.registration_date;
            return a.registration_id < b.registration_id;
        });
        ClientJourney& j = out[i];
        const auto& first = regs.front();
        const auto& last = regs.back();
        j.client_id = first.client_id;
        j.gender = first.gender;
        j.neighborhood = first.neighborhood;
        for (const auto& r : regs) j.groups.push_back(rules.classify(r));
        j.entry_age = whole_years_between(first.birth_date, first.registration_date);
        j.exit_age = whole_years_between(last.birth_date, last.registration_date);
        j.span_years = last.registration_date.year() - first.registration_date.year();
        j.entry_group = j.groups.front();
        j.exit_group = j.groups.back();
        j.entry_season = first.season;
        j.registrations = std::move(regs);
    });
    return out;
}

std::string_view facet_name(Facet f) noexcept {
    switch (f) {
        case Facet::entry_age: return "entry_age";
        case Facet::exit_age: return "exit_age";
        case Facet::span: return "span";
        case Facet::entry_group_gender: return "entry_group_gender";
        case Facet::exit_group_gender: return "exit_group_gender";
        case Facet::season_entry_age_group: return "season_entry_age_group";
        case Facet::neighborhood_share: return "neighborhood_share";
    }
    return "";
}

std::optional<Facet> parse_facet(std::string_view name) noexcept {
    for (Facet f : kAllFacets) {
        if (facet_name(f) == name) return f;
    }
    return std::nullopt;
}

csv::Table Distribution::to_table() const {
    csv::Table table;
    table.header.push_back("facet");
    for (const auto& k : key_columns) table.header.push_back(k);
    table.header.push_back("count");
    table.header.push_back("proportion");
    for (const auto& row : rows) {
        csv::Row r{std::string(facet_name(facet))};
        r.insert(r.end(), row.key.begin(), row.key.end());
        r.push_back(std::to_string(row.count));
        r.push_back(csv::format_number(row.proportion));
        table.rows.push_back(std::move(r));
    }
    return table;
}

Distribution distributions(const std::vector<ClientJourney>& journeys, Facet facet) {
    if (journeys.empty()) throw Error(ErrorCode::EmptyInput, "no journeys to summarize");
    Distribution out;
    out.facet = facet;
    auto key_of = [&](const ClientJourney& j) -> std::vector<std::string> {
        switch (facet) {
            case Facet::entry_age: return {std::to_string(j.entry_age)};
            case Facet::exit_age: return {std::to_string(j.exit_age)};
            case Facet::span: return {j.exit_group, std::to_string(j.span_years)};
            case Facet::entry_group_gender: return {j.entry_group, std::string(gender_name(j.gender))};
            case Facet::exit_group_gender: return {j.exit_group, std::string(gender_name(j.gender))};
            case Facet::season_entry_age_group:
                return {std::string(season_name(j.entry_season)), std::to_string(j.entry_age), j.entry_group};
            case Facet::neighborhood_share: return {j.neighborhood.value_or("unassigned")};
        }
        return {};
    };
    switch (facet) {
        case Facet::entry_age: out.key_columns = {"entry_age"}; break;
        case Facet::exit_age: out.key_columns = {"exit_age"}; break;
        case Facet::span: out.key_columns = {"exit_group", "span_years"}; break;
        case Facet::entry_group_gender: out.key_columns = {"entry_group", "gender"}; break;
        case Facet::exit_group_gender: out.key_columns = {"exit_group", "gender"}; break;
        case Facet::season_entry_age_group: out.key_columns = {"season", "entry_age", "entry_group"}; break;
        case Facet::neighborhood_share: out.key_columns = {"neighborhood_id"}; break;
    }

    std::map<std::vector<std::string>, long> counts;
    std::map<std::string, long> stratum;
    for (const auto& j : journeys) {
        auto key = key_of(j);
        ++counts[key];
        ++stratum[facet == Facet::span ? key[0] : std::string()];
    }
    for (const auto& [key, count] : counts) {
        long denom = stratum[facet == Facet::span ? key[0] : std::string()];
        out.rows.push_back({key, count, static_cast<double>(count) / static_cast<double>(denom)});
    }
    std::stable_sort(out.rows.begin(), out.rows.end(),
                     [](const DistributionRow& a, const DistributionRow& b) { return key_less(a.key, b.key); });
    return out;
}

std::vector<EnrollmentRate> enrollment_rates(const std::vector<ClientJourney>& journeys, std::string_view group,
                                             const std::vector<std::string>& neighborhoods,
                                             const std::map<std::string, long>& populations) {
    std::map<std::string, std::set<std::string>> clients;
    for (const auto& j : journeys) {
        if (!j.neighborhood) continue;
        if (std::find(j.groups.begin(), j.groups.end(), group) != j.groups.end()) clients[*j.neighborhood].insert(j.client_id);
    }
    std::vector<EnrollmentRate> out;
    for (const auto& n : neighborhoods) {
        auto it = populations.find(n);
        if (it == populations.end() || it->second <= 0) {
            throw Error(ErrorCode::MissingPopulation, "neighborhood '" + n + "' has no child population");
        }
        EnrollmentRate r;
        r.neighborhood = n;
        r.clients = static_cast<long>(clients[n].size());
        r.n_children = it->second;
        r.rate = static_cast<double>(r.clients) / static_cast<double>(r.n_children);
        out.push_back(r);
    }
    return out;
}

csv::Table rates_table(const std::vector<EnrollmentRate>& rates) {
    csv::Table table;
    table.header = {"neighborhood_id", "clients", "n_children", "rate"};
    for (const auto& r : rates) {
        table.rows.push_back({r.neighborhood, std::to_string(r.clients), std::to_string(r.n_children), csv::format_number(r.rate)});
    }
    return table;
}

csv::Table rejections_table(const std::vector<Rejection>& rejected) {
    csv::Table table;
    table.header = {"client_id", "registration_id", "reason"};
    for (const auto& r : rejected) {
        table.rows.push_back({r.record.client_id, r.record.registration_id, std::string(reason_name(r.reason))});
    }
    return table;
}

csv::Table journeys_table(const std::vector<ClientJourney>& journeys) {
    csv::Table table;
    table.header = {"client_id", "gender",    "neighborhood_id", "registrations", "entry_age",
                    "exit_age",  "span_years", "entry_group",    "exit_group",    "entry_season"};
    for (const auto& j : journeys) {
        table.rows.push_back({j.client_id, std::string(gender_name(j.gender)), j.neighborhood.value_or(""),
                              std::to_string(j.registrations.size()), std::to_string(j.entry_age), std::to_string(j.exit_age),
                              std::to_string(j.span_years), j.entry_group, j.exit_group,
                              std::string(season_name(j.entry_season))});
    }
    return table;
}

}  // namespace vulnscape::retention
