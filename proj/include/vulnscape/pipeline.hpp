#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulnscape/clustering.hpp"
#include "vulnscape/embedding.hpp"
#include "vulnscape/geo.hpp"
#include "vulnscape/hopkins.hpp"
#include "vulnscape/retention.hpp"
#include "vulnscape/stats.hpp"

namespace vulnscape::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

// Digests -------------------------------------------------------------------

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const fs::path& path);

// Inputs --------------------------------------------------------------------

/// Input files.  Census comes either from a neighborhood profile table or
/// from a DA table plus both geometry layers; both need the catalog.
struct DataPaths {
    fs::path edi;
    std::optional<fs::path> catalog;
    std::optional<fs::path> census_da;
    std::optional<fs::path> da_geometry;
    std::optional<fs::path> neighborhood_geometry;
    std::optional<fs::path> profiles;
    std::optional<fs::path> registrations;
    std::optional<fs::path> rules;

    /// Standard file names inside a data directory; absent files are left unset.
    static DataPaths from_dir(const fs::path& dir);
    /// name -> path for every set input.
    std::map<std::string, fs::path> named() const;
};

struct LoadedData {
    std::optional<DataPaths> paths;  ///< set by load(); recorded in manifests
    Dataset dataset;
    std::optional<std::vector<RegistrationRecord>> registrations;
    std::optional<retention::GroupingRules> rules;
    std::optional<geo::GeometrySet> neighborhood_geometry;
    std::optional<std::string> neighborhood_geojson;
    std::set<std::string> approximate_variables;
    std::map<std::string, double> unassigned_counts;
    std::map<std::string, std::string> digests;  ///< input name -> sha256
};

LoadedData load(const DataPaths& paths);

// Top-down --------------------------------------------------------------------

/// Hopkins runs on the (standardized) EDI vectors or on the 2-D embedding.
enum class HopkinsSpace { features, embedding };
std::string_view space_name(HopkinsSpace s) noexcept;
std::optional<HopkinsSpace> parse_space(std::string_view name) noexcept;

struct TopDownConfig {
    std::uint64_t seed = 0;
    EmbeddingConfig embedding;  ///< seed replaced per stage
    std::optional<int> k_single;
    std::optional<int> k_all;
    KMeansOptions kmeans;
    HopkinsConfig hopkins;  ///< seed replaced per stage
    HopkinsSpace hopkins_space = HopkinsSpace::features;
    stats::ScreeningConfig screening;
    Scale rank_scale = Scale::two_or_more;
    RankStatistic rank_statistic = RankStatistic::mean;
    std::vector<int> waves;  ///< empty: every wave in the dataset

    int k_for(WaveMode mode) const;

    friend bool operator==(const TopDownConfig&, const TopDownConfig&) = default;
};

struct ModeRun {
    WaveMode mode;
    EmbeddingInput input;
    Embedding embedding;
    ClusterSolution solution;  ///< rank-labeled
    HopkinsReport hopkins;
    std::map<std::string, int> neighborhood_labels;     ///< majority label in all-wave mode
    std::vector<stats::VariableTestResult> screening;  ///< empty without census data
};

EmbeddingInput prepare(const Dataset& dataset, WaveMode mode, const TopDownConfig& config);
Embedding embed_stage(const EmbeddingInput& input, const TopDownConfig& config);
ClusterSolution cluster_stage(const Dataset& dataset, const EmbeddingInput& input, const Embedding& embedding,
                              const TopDownConfig& config);
HopkinsReport validate_stage(const EmbeddingInput& input, const Embedding& embedding, const ClusterSolution& solution,
                             const TopDownConfig& config);
std::map<std::string, int> neighborhood_labels(const ClusterSolution& solution);

/// Embed, cluster, rank, validate and (with census data) screen one mode.
ModeRun run_mode(const Dataset& dataset, WaveMode mode, const TopDownConfig& config);

struct TopDownResult {
    std::map<int, ModeRun> single;
    ModeRun all;
    StabilityReport stability;
    json manifest;
};

/// Every selected wave plus the pooled run, then stability.  Writes the run
/// directory when `out_dir` is given.
TopDownResult run_topdown(const LoadedData& data, const TopDownConfig& config,
                          const std::optional<fs::path>& out_dir = std::nullopt);

// Bottom-up -------------------------------------------------------------------

struct BottomUpConfig {
    retention::FilterPolicy policy;

    friend bool operator==(const BottomUpConfig&, const BottomUpConfig&) = default;
};

struct BottomUpResult {
    retention::FilterResult filtered;
    std::vector<retention::ClientJourney> journeys;
    std::vector<retention::Distribution> distributions;
    std::map<std::string, std::vector<retention::EnrollmentRate>> rates;  ///< by group
    json manifest;
};

/// Filters, journeys, every facet and (with EDI populations) per-group
/// enrollment rates.  An empty kept set still writes the manifest, then
/// throws EmptyInput.
BottomUpResult run_bottomup(const LoadedData& data, const BottomUpConfig& config,
                            const std::optional<fs::path>& out_dir = std::nullopt);

// Linking -----------------------------------------------------------------------

struct LinkResult {
    std::vector<retention::EnrollmentRate> rates;
    std::vector<double> edi;
    stats::PearsonResult correlation;
    int wave = 0;
};

/// Pearson correlation of a group's enrollment rate with an EDI scale at
/// `wave` (default: latest) across neighborhoods.
LinkResult link(const Dataset& dataset, const std::vector<retention::ClientJourney>& journeys, std::string_view group,
                Scale scale, std::optional<int> wave = std::nullopt);

// Manifests -------------------------------------------------------------------

json encode(const EmbeddingConfig& c);
json encode(const KMeansOptions& c);
json encode(const HopkinsConfig& c);
json encode(const stats::ScreeningConfig& c);
json encode(const TopDownConfig& c);
json encode(const retention::FilterPolicy& c);
json encode(const BottomUpConfig& c);
json encode(const DataPaths& p);

/// Missing fields keep their defaults; wrong types or unknown enum names
/// throw InvalidArgument.
void decode(const json& j, EmbeddingConfig& c);
void decode(const json& j, KMeansOptions& c);
void decode(const json& j, HopkinsConfig& c);
void decode(const json& j, stats::ScreeningConfig& c);
void decode(const json& j, TopDownConfig& c);
void decode(const json& j, retention::FilterPolicy& c);
void decode(const json& j, BottomUpConfig& c);
void decode(const json& j, DataPaths& p);

inline constexpr std::string_view kManifestName = "manifest.json";
inline constexpr std::string_view kTimingsName = "timings.json";

/// Re-runs the run recorded in a manifest into `out_dir`.  Throws
/// KeyMismatch when an input file no longer matches its recorded digest.
json replay(const fs::path& manifest_path, const fs::path& out_dir);

}  // namespace vulnscape::pipeline
