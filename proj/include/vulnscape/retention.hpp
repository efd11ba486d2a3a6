#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/csv.hpp"
#include "vulnscape/domain.hpp"

namespace vulnscape::retention {

/// Record filters.  Date cutoffs are strict: a record passes only when the
/// date is later than the cutoff.
struct FilterPolicy {
    Date min_account_created{2000, 1, 1};
    Date min_birth_date{2000, 1, 1};
    bool require_completed = true;
    long min_max_registrants_exclusive = 1;

    friend bool operator==(const FilterPolicy&, const FilterPolicy&) = default;
};

/// Filter rules in evaluation order.
enum class RejectReason { account_created, birth_date, max_registrants, not_completed };
std::string_view reason_name(RejectReason r) noexcept;

struct Rejection {
    RegistrationRecord record;
    RejectReason reason;
};

struct FilterResult {
    std::vector<RegistrationRecord> kept;
    std::vector<Rejection> rejected;
};

/// Partitions the records; each rejection carries the first failing rule.
FilterResult apply_filters(const std::vector<RegistrationRecord>& records, const FilterPolicy& policy = {});

inline constexpr std::string_view kDefaultGroup = "General Activities";
inline constexpr std::size_t kGroupCount = 8;

/// One classification rule.  `pattern` is a case-insensitive substring of
/// "title subtitle"; `a&b` requires every part to occur.
struct Rule {
    std::string pattern;
    std::string group;
};

class GroupingRules {
public:
    GroupingRules(std::vector<Rule> rules, std::string default_group = std::string(kDefaultGroup));

    /// The shipped rule set (identical to data/program_groups.csv).
    static GroupingRules defaults();
    /// CSV `pattern,group`.  Rejects empty patterns and rule sets that do
    /// not reach exactly 8 distinct groups (default included).
    static GroupingRules parse(std::string_view text);
    static GroupingRules load(const std::filesystem::path& path);
    std::string serialize() const;

    /// First matching rule's group, else the default group.
    const std::string& classify(std::string_view title, std::string_view subtitle) const;
    const std::string& classify(const RegistrationRecord& record) const {
        return classify(record.course_title, record.course_subtitle);
    }

    /// Distinct reachable group names, sorted.
    std::vector<std::string> groups() const;
    const std::vector<Rule>& rules() const noexcept { return rules_; }
    const std::string& default_group() const noexcept { return default_group_; }

private:
    std::vector<Rule> rules_;
    std::vector<std::vector<std::string>> terms_;
    std::string default_group_;
};

struct ClientJourney {
    std::string client_id;
    Gender gender = Gender::unspecified;
    std::optional<std::string> neighborhood;
    std::vector<RegistrationRecord> registrations;  ///< by (date, registration_id)
    std::vector<std::string> groups;                ///< group of each registration
    int entry_age = 0;
    int exit_age = 0;
    int span_years = 0;  ///< exit calendar year - entry calendar year
    std::string entry_group;
    std::string exit_group;
    Season entry_season = Season::Winter;
};

/// One journey per client, sorted by client_id.  Gender and neighborhood
/// come from the first registration.
std::vector<ClientJourney> build_journeys(const std::vector<RegistrationRecord>& kept, const GroupingRules& rules);

enum class Facet {
    entry_age,
    exit_age,
    span,
    entry_group_gender,
    exit_group_gender,
    season_entry_age_group,
    neighborhood_share,
};
inline constexpr Facet kAllFacets[] = {Facet::entry_age,          Facet::exit_age,          Facet::span,
                                       Facet::entry_group_gender, Facet::exit_group_gender, Facet::season_entry_age_group,
                                       Facet::neighborhood_share};

std::string_view facet_name(Facet f) noexcept;
std::optional<Facet> parse_facet(std::string_view name) noexcept;

struct DistributionRow {
    std::vector<std::string> key;
    long count = 0;
    double proportion = 0.0;
};

/// Counts per key.  Proportions are of all journeys, except for `span`,
/// which is keyed (exit_group, span) and normalized within each exit group.
struct Distribution {
    Facet facet = Facet::entry_age;
    std::vector<std::string> key_columns;
    std::vector<DistributionRow> rows;

    csv::Table to_table() const;
};

/// Throws EmptyInput for no journeys.
Distribution distributions(const std::vector<ClientJourney>& journeys, Facet facet);

struct EnrollmentRate {
    std::string neighborhood;
    long clients = 0;
    long n_children = 0;
    double rate = 0.0;
};

/// Distinct clients whose journey touches `group`, per neighborhood, over
/// its child population.  Throws MissingPopulation for a listed
/// neighborhood without a positive population.
std::vector<EnrollmentRate> enrollment_rates(const std::vector<ClientJourney>& journeys, std::string_view group,
                                             const std::vector<std::string>& neighborhoods,
                                             const std::map<std::string, long>& populations);

csv::Table rates_table(const std::vector<EnrollmentRate>& rates);
csv::Table rejections_table(const std::vector<Rejection>& rejected);
csv::Table journeys_table(const std::vector<ClientJourney>& journeys);

}  // namespace vulnscape::retention
