#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vulnscape/domain.hpp"

namespace vulnscape {

inline constexpr std::string_view kEdiHeader =
    "neighborhood_id,neighborhood_name,wave,n_children,physical,social,emotional,language_cognitive,"
    "communication,one_or_more,two_or_more";
inline constexpr std::string_view kRegistrationHeader =
    "client_id,birth_date,gender,neighborhood_id,account_created,registration_id,course_id,course_title,"
    "course_subtitle,season,registration_date,completed,max_registrants,subsidized";
inline constexpr std::string_view kCatalogHeader = "var_id,label,category,kind";

// EDI ---------------------------------------------------------------------

/// Range-checked and de-duplicated.  Throws RowError (RangeViolation,
/// BaselineWave, Parse) with the offending line and field, MissingColumn,
/// or DuplicateKey.
std::vector<EdiRecord> parse_edi(std::string_view text);
std::vector<EdiRecord> load_edi(const std::filesystem::path& path);
std::string serialize_edi(const std::vector<EdiRecord>& records);

// Census ------------------------------------------------------------------

/// Catalog CSV `var_id,label,category,kind` with optional trailing
/// `numerator,denominator` columns for linked ratios.
Catalog parse_catalog(std::string_view text);
Catalog load_catalog(const std::filesystem::path& path);
std::string serialize_catalog(const Catalog& catalog);

/// DA table CSV (`da_id` + one column per var_id).  Empty cells are missing.
/// Throws UnknownVariable for a column absent from the catalog and
/// KindMismatch for a non-numeric cell.
DaTable parse_da_table(std::string_view text, const Catalog& catalog);
std::string serialize_da_table(const DaTable& table);

struct CensusData {
    Catalog catalog;
    DaTable table;
};

CensusData load_census(const std::filesystem::path& path, const std::filesystem::path& catalog_path);

/// Neighborhood-level profile CSV: `neighborhood_id` + catalog var_ids in
/// catalog order.  Missing values are empty cells.
std::string serialize_profiles(const std::vector<CensusProfile>& profiles, const Catalog& catalog);
std::vector<CensusProfile> parse_profiles(std::string_view text, const Catalog& catalog);
std::vector<CensusProfile> load_profiles(const std::filesystem::path& path, const Catalog& catalog);

// Registrations -----------------------------------------------------------

/// Throws RowError with BadDate, NegativeAge (registration before birth),
/// Parse, or MissingColumn.
std::vector<RegistrationRecord> parse_registrations(std::string_view text);
std::vector<RegistrationRecord> load_registrations(const std::filesystem::path& path);
std::string serialize_registrations(const std::vector<RegistrationRecord>& records);

}  // namespace vulnscape
