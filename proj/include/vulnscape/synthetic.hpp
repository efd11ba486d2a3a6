#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "vulnscape/domain.hpp"
#include "vulnscape/geo.hpp"

/// Seeded generators for realistic test and demo data.
namespace vulnscape::synthetic {

struct EdiOptions {
    int neighborhoods = 24;
    int blobs = 3;
    double center_step = 8.0;  ///< distance between blob centres per scale, in percent
    double spread = 1.5;       ///< per-scale standard deviation within a blob
};

struct EdiFixture {
    std::vector<EdiRecord> records;     ///< waves 2..6, wave-major
    std::map<std::string, int> truth;  ///< neighborhood -> blob (0 = least vulnerable)
};

/// Neighborhood i belongs to blob i % blobs.  Ids are N01, N02, ...
EdiFixture edi_blobs(std::uint64_t seed, const EdiOptions& options = {});

std::vector<NeighborhoodId> neighborhood_ids(int count);

struct CensusFixture {
    Catalog catalog;
    DaTable table;
    geo::GeometrySet da_geometry;
    geo::GeometrySet neighborhood_geometry;
};

/// Square neighborhoods on a 6-wide grid, each split into 3x3 DAs, plus two
/// DAs outside every neighborhood.  Income, unemployment and lone-parent
/// share track the blob; the other variables do not.
CensusFixture census_map(const std::map<std::string, int>& truth, std::uint64_t seed);

/// `count` registration records over the given neighborhoods.  Most
/// children leave between ages 7 and 9, and a few rows fail each filter.
std::vector<RegistrationRecord> registrations(std::uint64_t seed, const std::vector<std::string>& neighborhoods,
                                              std::size_t count = 500);

std::string to_geojson(const geo::GeometrySet& geometry);

/// Writes edi.csv, census_catalog.csv, census_da.csv, da_geometry.geojson,
/// neighborhoods.geojson and registrations.csv.
void write_data_dir(const std::filesystem::path& dir, std::uint64_t seed);

}  // namespace vulnscape::synthetic
