#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/dates.hpp"

namespace vulnscape {

struct NeighborhoodId {
    std::string id;
    std::string name;

    friend bool operator==(const NeighborhoodId&, const NeighborhoodId&) = default;
};

/// EDI collection wave.  Wave 1 is the baseline that defines the
/// vulnerability cutoff, so only waves 2..6 carry data.
class Wave {
public:
    static constexpr int kFirst = 2;
    static constexpr int kLast = 6;

    /// Throws BaselineWave for 1, RangeViolation for anything else outside 2..6.
    explicit Wave(int index);

    int index() const noexcept { return index_; }

    friend auto operator<=>(const Wave&, const Wave&) = default;

private:
    int index_ = kFirst;
};

enum class Scale {
    physical,
    social,
    emotional,
    language_cognitive,
    communication,
    one_or_more,
    two_or_more,
};

inline constexpr std::size_t kScaleCount = 7;
inline constexpr std::size_t kDomainScaleCount = 5;

std::string_view scale_name(Scale s) noexcept;
std::optional<Scale> parse_scale(std::string_view name) noexcept;

struct EdiRecord {
    NeighborhoodId neighborhood;
    Wave wave{Wave::kFirst};
    long n_children = 0;
    /// Percent vulnerable, indexed by Scale.
    std::array<double, kScaleCount> percent{};

    double value(Scale s) const noexcept { return percent[static_cast<std::size_t>(s)]; }
    double& value(Scale s) noexcept { return percent[static_cast<std::size_t>(s)]; }

    friend bool operator==(const EdiRecord&, const EdiRecord&) = default;
};

enum class CensusCategory {
    Geography,
    EthnicOrigins,
    LanguageImmigration,
    Income,
    CostOfLiving,
    Employment,
    Occupation,
    Population,
};

enum class CensusKind { count, percent, median, mean, ratio, rate };

std::string_view category_name(CensusCategory c) noexcept;
std::optional<CensusCategory> parse_category(std::string_view name) noexcept;
std::string_view kind_name(CensusKind k) noexcept;
std::optional<CensusKind> parse_kind(std::string_view name) noexcept;

struct CensusVariable {
    std::string var_id;
    std::string label;
    CensusCategory category = CensusCategory::Population;
    CensusKind kind = CensusKind::count;
    /// For ratio variables: count variables whose aggregated quotient
    /// recomputes the ratio.  Empty when not linked.
    std::string numerator;
    std::string denominator;

    friend bool operator==(const CensusVariable&, const CensusVariable&) = default;
};

/// Neighborhood-level census values.  A missing value (nullopt) is distinct from 0.
struct CensusProfile {
    std::string neighborhood;
    std::map<std::string, std::optional<double>> values;

    std::optional<double> get(const std::string& var_id) const {
        auto it = values.find(var_id);
        return it == values.end() ? std::nullopt : it->second;
    }

    friend bool operator==(const CensusProfile&, const CensusProfile&) = default;
};

/// Raw dissemination-area table as loaded: one row per DA, columns in file order.
struct DaTable {
    std::vector<std::string> da_ids;
    std::vector<std::string> var_ids;
    std::vector<std::vector<std::optional<double>>> values;

    std::optional<std::size_t> column(std::string_view var_id) const;
};

enum class Gender { male, female, unspecified };
enum class Season { Winter, Spring, Summer, Fall };

std::string_view gender_name(Gender g) noexcept;
/// Anything other than male/female spellings maps to unspecified.
Gender parse_gender(std::string_view text) noexcept;
std::string_view season_name(Season s) noexcept;
std::optional<Season> parse_season(std::string_view text) noexcept;

struct RegistrationRecord {
    std::string client_id;
    Date birth_date;
    Gender gender = Gender::unspecified;
    std::optional<std::string> neighborhood;  ///< nullopt = unassigned
    Date account_created;
    std::string registration_id;
    std::string course_id;
    std::string course_title;
    std::string course_subtitle;
    Season season = Season::Winter;
    Date registration_date;
    bool completed = false;
    long max_registrants = 0;
    bool subsidized = false;

    friend bool operator==(const RegistrationRecord&, const RegistrationRecord&) = default;
};

/// Catalog lookup by var_id.
class Catalog {
public:
    Catalog() = default;
    /// Throws DuplicateKey on repeated var_id.
    explicit Catalog(std::vector<CensusVariable> variables);

    const std::vector<CensusVariable>& variables() const noexcept { return variables_; }
    std::size_t size() const noexcept { return variables_.size(); }
    const CensusVariable* find(std::string_view var_id) const;

private:
    std::vector<CensusVariable> variables_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

struct Dataset {
    std::vector<NeighborhoodId> neighborhoods;
    std::vector<EdiRecord> edi;
    std::vector<CensusProfile> census;
    Catalog catalog;

    /// Builds the neighborhood list (first-appearance order) from the EDI
    /// records, then validates.
    static Dataset from_edi(std::vector<EdiRecord> records, std::vector<CensusProfile> census = {},
                            Catalog catalog = {});

    /// Re-runnable consistency check: known neighborhoods, unique
    /// (neighborhood, wave), census var_ids in catalog.  Throws on violation.
    void validate() const;

    const EdiRecord* find(std::string_view neighborhood, int wave) const;
    const CensusProfile* profile(std::string_view neighborhood) const;
    /// Sorted distinct waves present.
    std::vector<int> waves() const;
    /// n_children per neighborhood from its latest available wave.
    std::map<std::string, long> latest_populations() const;
};

}  // namespace vulnscape
