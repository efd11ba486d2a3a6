#include "vulnscape/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <memory>

#include "vulnscape/csv.hpp"
#include "vulnscape/error.hpp"
#include "vulnscape/io.hpp"
#include "vulnscape/rng.hpp"
#include "vulnscape/tables.hpp"

namespace vulnscape::pipeline {

std::string sha256_hex(std::string_view bytes) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw Error(ErrorCode::Io, "SHA-256 computation failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xF];
    }
    return out;
}

std::string sha256_file(const fs::path& path) { return sha256_hex(csv::read_text(path)); }

// Inputs ----------------------------------------------------------------------

DataPaths DataPaths::from_dir(const fs::path& dir) {
    DataPaths p;
    p.edi = dir / "edi.csv";
    auto opt = [&](const char* name) -> std::optional<fs::path> {
        fs::path f = dir / name;
        return fs::exists(f) ? std::optional<fs::path>(f) : std::nullopt;
    };
    p.catalog = opt("census_catalog.csv");
    p.census_da = opt("census_da.csv");
    p.da_geometry = opt("da_geometry.geojson");
    p.neighborhood_geometry = opt("neighborhoods.geojson");
    p.profiles = opt("census_profiles.csv");
    p.registrations = opt("registrations.csv");
    p.rules = opt("program_groups.csv");
    return p;
}

std::map<std::string, fs::path> DataPaths::named() const {
    std::map<std::string, fs::path> out;
    if (!edi.empty()) out["edi"] = edi;
    auto add = [&](const char* name, const std::optional<fs::path>& p) {
        if (p) out[name] = *p;
    };
    add("catalog", catalog);
    add("census_da", census_da);
    add("da_geometry", da_geometry);
    add("neighborhood_geometry", neighborhood_geometry);
    add("profiles", profiles);
    add("registrations", registrations);
    add("rules", rules);
    return out;
}

LoadedData load(const DataPaths& paths) {
    LoadedData out;
    out.paths = paths;
    for (const auto& [name, path] : paths.named()) {
        if (!fs::exists(path)) throw Error(ErrorCode::Io, "input '" + name + "' not found: " + path.string());
        out.digests[name] = sha256_file(path);
    }

    std::vector<EdiRecord> edi;
    if (!paths.edi.empty()) edi = load_edi(paths.edi);
    std::vector<CensusProfile> census;
    Catalog catalog;
    if (paths.catalog) catalog = load_catalog(*paths.catalog);
    if (paths.neighborhood_geometry) {
        out.neighborhood_geojson = csv::read_text(*paths.neighborhood_geometry);
        out.neighborhood_geometry = geo::parse_geojson(*out.neighborhood_geojson);
    }
    if (paths.profiles) {
        if (!paths.catalog) throw Error(ErrorCode::InvalidArgument, "census profiles need a catalog");
        census = load_profiles(*paths.profiles, catalog);
    } else if (paths.census_da) {
        if (!paths.catalog || !paths.da_geometry || !out.neighborhood_geometry) {
            throw Error(ErrorCode::InvalidArgument, "a DA table needs the catalog and both geometry layers");
        }
        auto da_table = parse_da_table(csv::read_text(*paths.census_da), catalog);
        auto da_geo = geo::load_geojson(paths.da_geometry->string());
        auto assignment = geo::assign_da(da_geo, *out.neighborhood_geometry);
        auto agg = geo::aggregate(assignment, da_table, catalog);
        census = std::move(agg.profiles);
        out.approximate_variables = std::move(agg.approximate);
        out.unassigned_counts = std::move(agg.unassigned_counts);
    }
    if (!edi.empty()) {
        // Profiles for neighborhoods without EDI data cannot be used by any analysis.
        std::set<std::string> known;
        for (const auto& r : edi) known.insert(r.neighborhood.id);
        std::erase_if(census, [&](const CensusProfile& p) { return !known.count(p.neighborhood); });
        out.dataset = Dataset::from_edi(std::move(edi), std::move(census), std::move(catalog));
    } else {
        out.dataset.catalog = std::move(catalog);
    }
    if (paths.registrations) out.registrations = load_registrations(*paths.registrations);
    if (paths.rules) out.rules = retention::GroupingRules::load(*paths.rules);
    return out;
}

// Top-down ----------------------------------------------------------------------

std::string_view space_name(HopkinsSpace s) noexcept { return s == HopkinsSpace::features ? "features" : "embedding"; }

std::optional<HopkinsSpace> parse_space(std::string_view name) noexcept {
    if (name == "features") return HopkinsSpace::features;
    if (name == "embedding") return HopkinsSpace::embedding;
    return std::nullopt;
}

int TopDownConfig::k_for(WaveMode mode) const {
    if (mode.is_all()) return k_all.value_or(default_k(mode, embedding.method));
    return k_single.value_or(default_k(mode, embedding.method));
}

EmbeddingInput prepare(const Dataset& dataset, WaveMode mode, const TopDownConfig& config) {
    return build_matrix(dataset, mode, config.embedding.standardize);
}

Embedding embed_stage(const EmbeddingInput& input, const TopDownConfig& config) {
    EmbeddingConfig ec = config.embedding;
    ec.seed = stage_seed(config.seed, "embed/" + input.mode.label());
    return embed(input, ec);
}

ClusterSolution cluster_stage(const Dataset& dataset, const EmbeddingInput& input, const Embedding& embedding,
                              const TopDownConfig& config) {
    auto sol = kmeans(embedding.points, config.k_for(input.mode), stage_seed(config.seed, "kmeans/" + input.mode.label()),
                      config.kmeans);
    sol.mode = input.mode;
    sol.method = std::string(method_name(config.embedding.method));
    sol.keys = input.keys;
    return rank_labels(sol, dataset, config.rank_scale, config.rank_statistic);
}

HopkinsReport validate_stage(const EmbeddingInput& input, const Embedding& embedding, const ClusterSolution& solution,
                             const TopDownConfig& config) {
    HopkinsConfig hc = config.hopkins;
    hc.seed = stage_seed(config.seed, "hopkins/" + input.mode.label());
    const Matrix& points = config.hopkins_space == HopkinsSpace::features ? input.data : embedding.points;
    return hopkins_per_cluster(points, solution.labels, hc);
}

std::map<std::string, int> neighborhood_labels(const ClusterSolution& solution) {
    if (solution.mode.is_all()) return majority_labels(solution);
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < solution.keys.size(); ++i) out[solution.keys[i].neighborhood] = solution.labels[i];
    return out;
}

ModeRun run_mode(const Dataset& dataset, WaveMode mode, const TopDownConfig& config) {
    ModeRun run;
    run.mode = mode;
    run.input = prepare(dataset, mode, config);
    run.embedding = embed_stage(run.input, config);
    run.solution = cluster_stage(dataset, run.input, run.embedding, config);
    run.hopkins = validate_stage(run.input, run.embedding, run.solution, config);
    run.neighborhood_labels = neighborhood_labels(run.solution);
    if (!dataset.census.empty()) run.screening = stats::screen(dataset.census, run.neighborhood_labels, config.screening);
    return run;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Collects artifacts for the manifest as they are written.
class RunWriter {
public:
    explicit RunWriter(std::optional<fs::path> dir) : dir_(std::move(dir)) {
        if (dir_) fs::create_directories(*dir_);
    }

    void write(const std::string& name, const std::string& text) {
        if (!dir_) return;
        csv::write_text(*dir_ / name, text);
        artifacts_.push_back({{"path", name}, {"sha256", sha256_hex(text)}});
    }
    void write(const std::string& name, const csv::Table& table) { write(name, csv::to_string(table)); }

    json finish(json manifest, const json& timings) {
        if (dir_) {
            csv::write_text(*dir_ / std::string(kTimingsName), timings.dump(2) + "\n");
            artifacts_.push_back({{"path", std::string(kTimingsName)}, {"deterministic", false}});
        }
        manifest["artifacts"] = artifacts_;
        if (dir_) csv::write_text(*dir_ / std::string(kManifestName), manifest.dump(2) + "\n");
        return manifest;
    }

private:
    std::optional<fs::path> dir_;
    json artifacts_ = json::array();
};

json inputs_json(const LoadedData& data) {
    json inputs = json::object();
    if (!data.paths) return inputs;
    for (const auto& [name, path] : data.paths->named()) {
        inputs[name] = {{"path", fs::absolute(path).lexically_normal().string()}, {"sha256", data.digests.at(name)}};
    }
    return inputs;
}

}  // namespace

TopDownResult run_topdown(const LoadedData& data, const TopDownConfig& config, const std::optional<fs::path>& out_dir) {
    const Dataset& dataset = data.dataset;
    dataset.validate();
    config.hopkins.validate();
    config.screening.validate();
    std::vector<int> waves = config.waves.empty() ? dataset.waves() : config.waves;
    std::sort(waves.begin(), waves.end());
    waves.erase(std::unique(waves.begin(), waves.end()), waves.end());
    if (waves.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no EDI waves");

    TopDownResult result;
    RunWriter writer(out_dir);
    json timings = json::object();
    json warnings = json::array();

    auto emit = [&](const ModeRun& run) {
        const std::string label = run.mode.label();
        writer.write("embedding_" + label + ".csv", tables::embedding(run.embedding));
        writer.write("trace_" + label + ".csv", tables::trace(run.embedding));
        writer.write("solution_" + label + ".csv", tables::solution(run.embedding, run.solution));
        writer.write("hopkins_" + label + ".csv", tables::hopkins(run.hopkins));
        if (!dataset.census.empty()) writer.write("screening_" + label + ".csv", tables::screening(run.screening, dataset.catalog));
        for (const auto& w : run.input.warnings) warnings.push_back(label + ": " + w);
    };

    for (int w : waves) {
        auto start = Clock::now();
        result.single.emplace(w, run_mode(dataset, WaveMode::single(w), config));
        timings[WaveMode::single(w).label()] = elapsed_ms(start);
        emit(result.single.at(w));
    }
    auto start = Clock::now();
    result.all = run_mode(dataset, WaveMode::all(), config);
    timings["all"] = elapsed_ms(start);
    emit(result.all);

    std::map<int, ClusterSolution> s_solutions;
    for (const auto& [w, run] : result.single) s_solutions.emplace(w, run.solution);
    result.stability = stability(s_solutions, result.all.solution);
    writer.write("stability.csv", tables::stability(result.stability));

    json manifest = {{"kind", "topdown"},
                     {"format", 1},
                     {"seed", config.seed},
                     {"config", encode(config)},
                     {"inputs", inputs_json(data)},
                     {"warnings", warnings}};
    result.manifest = writer.finish(std::move(manifest), timings);
    return result;
}

// Bottom-up -------------------------------------------------------------------

BottomUpResult run_bottomup(const LoadedData& data, const BottomUpConfig& config, const std::optional<fs::path>& out_dir) {
    if (!data.registrations) throw Error(ErrorCode::InvalidArgument, "no registration records loaded");
    const auto rules = data.rules.value_or(retention::GroupingRules::defaults());

    BottomUpResult result;
    RunWriter writer(out_dir);
    json timings = json::object();
    json manifest = {{"kind", "bottomup"},
                     {"format", 1},
                     {"config", encode(config)},
                     {"rules", json::parse("[]")},
                     {"inputs", inputs_json(data)}};
    for (const auto& r : rules.rules()) manifest["rules"].push_back({r.pattern, r.group});

    auto start = Clock::now();
    result.filtered = retention::apply_filters(*data.registrations, config.policy);
    timings["filter"] = elapsed_ms(start);
    writer.write("rejections.csv", retention::rejections_table(result.filtered.rejected));
    manifest["records"] = {{"input", data.registrations->size()},
                           {"kept", result.filtered.kept.size()},
                           {"rejected", result.filtered.rejected.size()}};
    if (result.filtered.kept.empty()) {
        result.manifest = writer.finish(std::move(manifest), timings);
        throw Error(ErrorCode::EmptyInput, "every registration record was filtered out");
    }

    start = Clock::now();
    result.journeys = retention::build_journeys(result.filtered.kept, rules);
    timings["journeys"] = elapsed_ms(start);
    writer.write("journeys.csv", retention::journeys_table(result.journeys));

    start = Clock::now();
    for (auto facet : retention::kAllFacets) {
        result.distributions.push_back(retention::distributions(result.journeys, facet));
        writer.write("retention_" + std::string(retention::facet_name(facet)) + ".csv", result.distributions.back().to_table());
    }
    timings["distributions"] = elapsed_ms(start);

    if (!data.dataset.edi.empty()) {
        std::vector<std::string> ids;
        for (const auto& n : data.dataset.neighborhoods) ids.push_back(n.id);
        std::sort(ids.begin(), ids.end());
        auto populations = data.dataset.latest_populations();
        csv::Table rates;
        rates.header = {"group", "neighborhood_id", "clients", "n_children", "rate"};
        for (const auto& group : rules.groups()) {
            auto r = retention::enrollment_rates(result.journeys, group, ids, populations);
            for (const auto& row : r) {
                rates.rows.push_back({group, row.neighborhood, std::to_string(row.clients), std::to_string(row.n_children),
                                      csv::format_number(row.rate)});
            }
            result.rates.emplace(group, std::move(r));
        }
        writer.write("enrollment_rates.csv", rates);
    }
    result.manifest = writer.finish(std::move(manifest), timings);
    return result;
}

// Linking -----------------------------------------------------------------------

LinkResult link(const Dataset& dataset, const std::vector<retention::ClientJourney>& journeys, std::string_view group,
                Scale scale, std::optional<int> wave) {
    auto waves = dataset.waves();
    if (waves.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no EDI waves");
    LinkResult out;
    out.wave = wave.value_or(waves.back());
    std::vector<std::string> ids;
    for (const auto& n : dataset.neighborhoods) ids.push_back(n.id);
    std::sort(ids.begin(), ids.end());
    out.rates = retention::enrollment_rates(journeys, group, ids, dataset.latest_populations());
    std::vector<double> x;
    for (const auto& r : out.rates) {
        const auto* rec = dataset.find(r.neighborhood, out.wave);
        if (!rec) {
            throw Error(ErrorCode::MissingWave,
                        "neighborhood '" + r.neighborhood + "' has no wave " + std::to_string(out.wave) + " record");
        }
        x.push_back(r.rate);
        out.edi.push_back(rec->value(scale));
    }
    out.correlation = stats::pearson(x, out.edi);
    return out;
}

// Config encoding -----------------------------------------------------------------

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' has the wrong type");
    }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(j, key, value);
    out = value;
}

template <class E, class Parse>
void read_enum(const json& j, const char* key, E& out, Parse parse) {
    if (!j.contains(key)) return;
    std::string name;
    read(j, key, name);
    auto v = parse(name);
    if (!v) throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' has unknown value '" + name + "'");
    out = *v;
}

void require_object(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "expected a JSON object");
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json opt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

void read_date(const json& j, const char* key, Date& out) {
    if (!j.contains(key)) return;
    std::string text;
    read(j, key, text);
    auto d = Date::parse(text);
    if (!d) throw Error(ErrorCode::BadDate, std::string("field '") + key + "' is not a YYYY-MM-DD date");
    out = *d;
}

}  // namespace

json encode(const EmbeddingConfig& c) {
    return {{"method", method_name(c.method)},
            {"perplexity", opt(c.perplexity)},
            {"iterations", c.iterations},
            {"learning_rate", opt(c.learning_rate)},
            {"exaggeration_iterations", c.exaggeration_iterations},
            {"exaggeration", c.exaggeration},
            {"n_neighbors", c.n_neighbors},
            {"min_dist", c.min_dist},
            {"epochs", c.epochs},
            {"negative_samples", c.negative_samples},
            {"standardize", c.standardize}};
}

json encode(const KMeansOptions& c) {
    return {{"restarts", c.restarts}, {"max_iterations", c.max_iterations}, {"tolerance", c.tolerance}};
}

json encode(const HopkinsConfig& c) {
    return {{"sample_fraction", c.sample_fraction},
            {"min_sample", c.min_sample},
            {"repeats", c.repeats},
            {"exponent", exponent_name(c.exponent)},
            {"null_variance", null_variance_name(c.null_variance)}};
}

json encode(const stats::ScreeningConfig& c) {
    return {{"alpha", c.alpha},
            {"normality_test", stats::normality_name(c.normality_test)},
            {"homogeneity_test", stats::homogeneity_name(c.homogeneity_test)},
            {"correction", stats::correction_name(c.correction)}};
}

json encode(const TopDownConfig& c) {
    return {{"seed", c.seed},
            {"embedding", encode(c.embedding)},
            {"k_single", opt(c.k_single)},
            {"k_all", opt(c.k_all)},
            {"kmeans", encode(c.kmeans)},
            {"hopkins", encode(c.hopkins)},
            {"hopkins_space", space_name(c.hopkins_space)},
            {"screening", encode(c.screening)},
            {"rank_scale", scale_name(c.rank_scale)},
            {"rank_statistic", statistic_name(c.rank_statistic)},
            {"waves", c.waves}};
}

json encode(const retention::FilterPolicy& c) {
    return {{"min_account_created", c.min_account_created.iso()},
            {"min_birth_date", c.min_birth_date.iso()},
            {"require_completed", c.require_completed},
            {"min_max_registrants_exclusive", c.min_max_registrants_exclusive}};
}

json encode(const BottomUpConfig& c) { return {{"policy", encode(c.policy)}}; }

json encode(const DataPaths& p) {
    json out = json::object();
    for (const auto& [name, path] : p.named()) out[name] = path.string();
    return out;
}

void decode(const json& j, EmbeddingConfig& c) {
    require_object(j);
    read_enum(j, "method", c.method, parse_method);
    read(j, "perplexity", c.perplexity);
    read(j, "iterations", c.iterations);
    read(j, "learning_rate", c.learning_rate);
    read(j, "exaggeration_iterations", c.exaggeration_iterations);
    read(j, "exaggeration", c.exaggeration);
    read(j, "n_neighbors", c.n_neighbors);
    read(j, "min_dist", c.min_dist);
    read(j, "epochs", c.epochs);
    read(j, "negative_samples", c.negative_samples);
    read(j, "standardize", c.standardize);
}

void decode(const json& j, KMeansOptions& c) {
    require_object(j);
    read(j, "restarts", c.restarts);
    read(j, "max_iterations", c.max_iterations);
    read(j, "tolerance", c.tolerance);
}

void decode(const json& j, HopkinsConfig& c) {
    require_object(j);
    read(j, "sample_fraction", c.sample_fraction);
    read(j, "min_sample", c.min_sample);
    read(j, "repeats", c.repeats);
    read_enum(j, "exponent", c.exponent, parse_exponent);
    read_enum(j, "null_variance", c.null_variance, parse_null_variance);
}

void decode(const json& j, stats::ScreeningConfig& c) {
    require_object(j);
    read(j, "alpha", c.alpha);
    read_enum(j, "normality_test", c.normality_test, stats::parse_normality);
    read_enum(j, "homogeneity_test", c.homogeneity_test, stats::parse_homogeneity);
    read_enum(j, "correction", c.correction, stats::parse_correction);
}

void decode(const json& j, TopDownConfig& c) {
    require_object(j);
    read(j, "seed", c.seed);
    if (j.contains("embedding")) decode(j.at("embedding"), c.embedding);
    read(j, "k_single", c.k_single);
    read(j, "k_all", c.k_all);
    if (j.contains("kmeans")) decode(j.at("kmeans"), c.kmeans);
    if (j.contains("hopkins")) decode(j.at("hopkins"), c.hopkins);
    read_enum(j, "hopkins_space", c.hopkins_space, parse_space);
    if (j.contains("screening")) decode(j.at("screening"), c.screening);
    read_enum(j, "rank_scale", c.rank_scale, parse_scale);
    read_enum(j, "rank_statistic", c.rank_statistic, parse_statistic);
    read(j, "waves", c.waves);
}

void decode(const json& j, retention::FilterPolicy& c) {
    require_object(j);
    read_date(j, "min_account_created", c.min_account_created);
    read_date(j, "min_birth_date", c.min_birth_date);
    read(j, "require_completed", c.require_completed);
    read(j, "min_max_registrants_exclusive", c.min_max_registrants_exclusive);
}

void decode(const json& j, BottomUpConfig& c) {
    require_object(j);
    if (j.contains("policy")) decode(j.at("policy"), c.policy);
}

void decode(const json& j, DataPaths& p) {
    require_object(j);
    auto path_of = [&](const char* key) -> std::optional<fs::path> {
        if (!j.contains(key)) return std::nullopt;
        const auto& v = j.at(key);
        std::string s;
        if (v.is_object()) {
            read(v, "path", s);
        } else {
            read(j, key, s);
        }
        return fs::path(s);
    };
    if (auto e = path_of("edi")) p.edi = *e;
    p.catalog = path_of("catalog");
    p.census_da = path_of("census_da");
    p.da_geometry = path_of("da_geometry");
    p.neighborhood_geometry = path_of("neighborhood_geometry");
    p.profiles = path_of("profiles");
    p.registrations = path_of("registrations");
    p.rules = path_of("rules");
}

// Replay --------------------------------------------------------------------------

json replay(const fs::path& manifest_path, const fs::path& out_dir) {
    json manifest;
    try {
        manifest = json::parse(csv::read_text(manifest_path));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, "manifest is not valid JSON: " + std::string(e.what()));
    }
    require_object(manifest);
    DataPaths paths;
    if (manifest.contains("inputs")) decode(manifest.at("inputs"), paths);
    const json inputs = manifest.value("inputs", json::object());
    for (const auto& [name, entry] : inputs.items()) {
        std::string expected = entry.value("sha256", "");
        fs::path path = entry.value("path", "");
        if (!fs::exists(path)) throw Error(ErrorCode::Io, "recorded input '" + name + "' is missing: " + path.string());
        if (sha256_file(path) != expected) {
            throw Error(ErrorCode::KeyMismatch, "input '" + name + "' changed since the run was recorded");
        }
    }
    auto data = load(paths);

    std::string kind = manifest.value("kind", "");
    if (kind == "topdown") {
        TopDownConfig config;
        decode(manifest.at("config"), config);
        return run_topdown(data, config, out_dir).manifest;
    }
    if (kind == "bottomup") {
        BottomUpConfig config;
        decode(manifest.at("config"), config);
        if (manifest.contains("rules") && !paths.rules) {
            std::vector<retention::Rule> rules;
            for (const auto& r : manifest.at("rules")) rules.push_back({r.at(0).get<std::string>(), r.at(1).get<std::string>()});
            data.rules = retention::GroupingRules(std::move(rules));
        }
        return run_bottomup(data, config, out_dir).manifest;
    }
    throw Error(ErrorCode::InvalidArgument, "manifest has unknown kind '" + kind + "'");
}

}  // namespace vulnscape::pipeline
