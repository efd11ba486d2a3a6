#include "vulnscape/cli.hpp"

#include <algorithm>
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "vulnscape/csv.hpp"
#include "vulnscape/error.hpp"
#include "vulnscape/io.hpp"
#include "vulnscape/parallel.hpp"
#include "vulnscape/pipeline.hpp"
#include "vulnscape/service.hpp"
#include "vulnscape/tables.hpp"

namespace vulnscape::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::json;

struct Inputs {
    std::string data_dir;
    std::string edi, catalog, census_da, da_geometry, neighborhoods, profiles, registrations, rules;

    void add(CLI::App* app) {
        app->add_option("--data-dir", data_dir, "Data directory (default: $VULNSCAPE_DATA_DIR or .)");
        app->add_option("--edi", edi, "EDI CSV (default: <data-dir>/edi.csv)");
        app->add_option("--catalog", catalog, "Census catalog CSV");
        app->add_option("--census-da", census_da, "Census DA table CSV");
        app->add_option("--da-geometry", da_geometry, "DA GeoJSON");
        app->add_option("--neighborhoods", neighborhoods, "Neighborhood GeoJSON");
        app->add_option("--profiles", profiles, "Neighborhood census profile CSV");
        app->add_option("--registrations", registrations, "Registration CSV");
        app->add_option("--rules", rules, "Program grouping rules CSV (pattern,group)");
    }

    pipeline::DataPaths paths() const {
        fs::path dir = data_dir;
        if (dir.empty()) {
            const char* env = std::getenv("VULNSCAPE_DATA_DIR");
            dir = env && *env ? env : ".";
        }
        auto p = pipeline::DataPaths::from_dir(dir);
        auto set = [](std::optional<fs::path>& slot, const std::string& v) {
            if (!v.empty()) slot = v;
        };
        if (!edi.empty()) p.edi = edi;
        set(p.catalog, catalog);
        set(p.census_da, census_da);
        set(p.da_geometry, da_geometry);
        set(p.neighborhood_geometry, neighborhoods);
        set(p.profiles, profiles);
        set(p.registrations, registrations);
        set(p.rules, rules);
        if (!profiles.empty()) p.census_da.reset();
        return p;
    }
};

struct Analysis {
    std::uint64_t seed = 0;
    std::string method = "tsne";
    int wave = 0;
    bool all_waves = false;
    std::optional<double> perplexity, learning_rate;
    EmbeddingConfig embedding;
    std::optional<int> k;
    KMeansOptions kmeans;
    std::string rank_scale = "two_or_more";
    std::string rank_statistic = "mean";
    HopkinsConfig hopkins;
    std::string exponent = "d";
    std::string null_variance = "single";
    std::string space = "features";
    stats::ScreeningConfig screening;
    std::string correction = "none", normality = "shapiro_wilk", homogeneity = "brown_forsythe";

    CLI::Option* add_embedding(CLI::App* app, bool seed_required) {
        auto* s = app->add_option("--seed", seed, "Master seed (required)");
        if (seed_required) s->required();
        app->add_option("--method", method, "Embedding method")->check(CLI::IsMember({"tsne", "umap", "pca"}));
        app->add_option("--wave", wave, "Single wave to analyse (default: latest)");
        app->add_flag("--all-waves", all_waves, "Pool every wave (all-wave mode)");
        app->add_option("--perplexity", perplexity, "t-SNE perplexity (default: min(30, floor((n-1)/3)))");
        app->add_option("--iterations", embedding.iterations, "t-SNE iterations");
        app->add_option("--learning-rate", learning_rate, "t-SNE learning rate (default: max(50, n/12))");
        app->add_option("--exaggeration-iterations", embedding.exaggeration_iterations, "t-SNE early exaggeration iterations");
        app->add_option("--exaggeration", embedding.exaggeration, "t-SNE early exaggeration factor");
        app->add_option("--n-neighbors", embedding.n_neighbors, "UMAP neighbours");
        app->add_option("--min-dist", embedding.min_dist, "UMAP minimum distance");
        app->add_option("--epochs", embedding.epochs, "UMAP epochs");
        app->add_option("--negative-samples", embedding.negative_samples, "UMAP negative samples per edge");
        app->add_option("--standardize", embedding.standardize, "Z-score the scales before embedding");
        return s;
    }
    void add_clustering(CLI::App* app) {
        app->add_option("--k", k, "Cluster count (default: 3 single-wave, 6 t-SNE all-wave, 4 UMAP all-wave)");
        app->add_option("--restarts", kmeans.restarts, "k-means restarts");
        app->add_option("--max-iterations", kmeans.max_iterations, "Lloyd iterations per restart");
        app->add_option("--rank-scale", rank_scale, "EDI scale that orders cluster labels");
        app->add_option("--rank-statistic", rank_statistic, "Cluster statistic for ranking")->check(CLI::IsMember({"mean", "median"}));
    }
    void add_hopkins(CLI::App* app) {
        app->add_option("--sample-fraction", hopkins.sample_fraction, "Hopkins sample fraction");
        app->add_option("--min-sample", hopkins.min_sample, "Hopkins minimum sample size");
        app->add_option("--repeats", hopkins.repeats, "Hopkins repeats");
        app->add_option("--exponent", exponent, "Distance exponent")->check(CLI::IsMember({"d", "one"}));
        app->add_option("--null-variance", null_variance, "Hopkins p-value null variance")
            ->check(CLI::IsMember({"single", "repeats"}));
        app->add_option("--space", space, "Point set for Hopkins")->check(CLI::IsMember({"features", "embedding"}));
    }
    void add_screening(CLI::App* app) {
        app->add_option("--alpha", screening.alpha, "Significance level");
        app->add_option("--correction", correction, "Multiple-testing correction")->check(CLI::IsMember({"none", "benjamini_hochberg"}));
        app->add_option("--normality", normality, "Normality test")->check(CLI::IsMember({"shapiro_wilk", "anderson_darling"}));
        app->add_option("--homogeneity", homogeneity, "Homogeneity test")->check(CLI::IsMember({"brown_forsythe", "bartlett"}));
    }

    WaveMode mode(const Dataset& ds) const {
        if (all_waves) return WaveMode::all();
        int w = wave;
        if (w == 0) {
            auto waves = ds.waves();
            if (waves.empty()) throw Error(ErrorCode::EmptyInput, "dataset has no EDI waves");
            w = waves.back();
        }
        Wave checked(w);
        return WaveMode::single(checked.index());
    }

    pipeline::TopDownConfig config(std::optional<WaveMode> mode) const {
        pipeline::TopDownConfig c;
        c.seed = seed;
        c.embedding = embedding;
        c.embedding.method = *parse_method(method);
        c.embedding.perplexity = perplexity;
        c.embedding.learning_rate = learning_rate;
        if (k) {
            if (*k < 1) throw Error(ErrorCode::KExceedsN, "--k must satisfy 1 <= k <= n, got " + std::to_string(*k));
            if (!mode || !mode->is_all()) c.k_single = k;
            if (!mode || mode->is_all()) c.k_all = k;
        }
        c.kmeans = kmeans;
        auto scale = parse_scale(rank_scale);
        if (!scale) throw Error(ErrorCode::InvalidArgument, "unknown --rank-scale '" + rank_scale + "'");
        c.rank_scale = *scale;
        c.rank_statistic = *parse_statistic(rank_statistic);
        c.hopkins = hopkins;
        c.hopkins.exponent = *parse_exponent(exponent);
        c.hopkins.null_variance = *parse_null_variance(null_variance);
        c.hopkins_space = *pipeline::parse_space(space);
        c.screening = screening;
        c.screening.correction = *stats::parse_correction(correction);
        c.screening.normality_test = *stats::parse_normality(normality);
        c.screening.homogeneity_test = *stats::parse_homogeneity(homogeneity);
        c.hopkins.validate();
        c.screening.validate();
        return c;
    }
};

void emit(const std::string& path, const csv::Table& table, std::ostream& out) {
    if (path.empty() || path == "-") {
        csv::write_row(out, table.header);
        for (const auto& r : table.rows) csv::write_row(out, r);
    } else {
        csv::write_file(path, table);
    }
}

Date parse_date_flag(const std::string& text, const char* flag) {
    auto d = Date::parse(text);
    if (!d) throw Error(ErrorCode::BadDate, std::string(flag) + " must be a YYYY-MM-DD date");
    return *d;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Neighborhood vulnerability analytics: embedding, clustering, validation, screening and retention.",
                 "vulnscape"};
    app.option_defaults()->always_capture_default();
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    std::size_t threads = 0;
    app.add_option("--threads", threads, "Worker threads (0: hardware concurrency)");

    Inputs inputs;
    Analysis analysis;
    std::string out_path, trace_path, out_dir, manifest_path;

    auto* ingest = app.add_subcommand("ingest", "Load and validate inputs; aggregate census DAs to neighborhood profiles");
    inputs.add(ingest);
    ingest->add_option("--out", out_path, "Write aggregated profiles CSV here");

    auto* embed = app.add_subcommand("embed", "Project EDI vectors to 2-D");
    inputs.add(embed);
    analysis.add_embedding(embed, true);
    embed->add_option("--out", out_path, "Embedding CSV (key,wave,x,y); - for stdout");
    embed->add_option("--trace", trace_path, "Objective trace CSV");

    auto* cluster = app.add_subcommand("cluster", "Embed, run k-means and rank labels by vulnerability");
    inputs.add(cluster);
    analysis.add_embedding(cluster, true);
    analysis.add_clustering(cluster);
    cluster->add_option("--out", out_path, "Solution CSV (key,wave,x,y,label); - for stdout");

    auto* validate = app.add_subcommand("validate", "Hopkins clustering tendency per cluster");
    inputs.add(validate);
    analysis.add_embedding(validate, true);
    analysis.add_clustering(validate);
    analysis.add_hopkins(validate);
    validate->add_option("--out", out_path, "Hopkins CSV; - for stdout");

    auto* screen = app.add_subcommand("screen", "ANOVA / Kruskal-Wallis census screening across clusters");
    inputs.add(screen);
    analysis.add_embedding(screen, true);
    analysis.add_clustering(screen);
    analysis.add_screening(screen);
    screen->add_option("--out", out_path, "Screening CSV; - for stdout");

    auto* stab = app.add_subcommand("stability", "Full top-down run: every wave, all-wave pooling and stability");
    inputs.add(stab);
    auto* stab_seed = analysis.add_embedding(stab, false);
    analysis.add_clustering(stab);
    analysis.add_hopkins(stab);
    analysis.add_screening(stab);
    stab->add_option("--out-dir", out_dir, "Run directory")->required();
    auto* stab_manifest = stab->add_option("--manifest", manifest_path, "Replay the run recorded in this manifest");

    auto* ret = app.add_subcommand("retention", "Bottom-up registration analysis");
    inputs.add(ret);
    retention::FilterPolicy policy;
    std::string min_account = policy.min_account_created.iso(), min_birth = policy.min_birth_date.iso();
    bool include_incomplete = false;
    ret->add_option("--min-account-created", min_account, "Keep accounts created after this date");
    ret->add_option("--min-birth-date", min_birth, "Keep children born after this date");
    ret->add_flag("--include-incomplete", include_incomplete, "Keep registrations that were not completed");
    ret->add_option("--min-max-registrants", policy.min_max_registrants_exclusive,
                    "Keep courses whose capacity exceeds this");
    ret->add_option("--out-dir", out_dir, "Run directory")->required();
    auto* ret_manifest = ret->add_option("--manifest", manifest_path, "Replay the run recorded in this manifest");

    auto* link = app.add_subcommand("link", "Correlate a program group's enrollment rate with an EDI scale");
    inputs.add(link);
    std::string group(retention::kDefaultGroup), link_scale = "one_or_more";
    int link_wave = 0;
    link->add_option("--group", group, "Program group");
    link->add_option("--scale", link_scale, "EDI scale");
    link->add_option("--wave", link_wave, "EDI wave (default: latest)");
    link->add_option("--out", out_path, "Per-neighborhood rate CSV");

    auto* serve = app.add_subcommand("serve", "Start the HTTP API");
    std::string data_dir, host = "127.0.0.1";
    int port = 8080;
    serve->add_option("--data-dir", data_dir, "Data directory (default: $VULNSCAPE_DATA_DIR)");
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "Port");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    if (*stab && stab_seed->empty() && stab_manifest->empty()) {
        err << "--seed is required (or --manifest to replay a recorded run)\n" << stab->help();
        return 1;
    }

    try {
        if (threads > 0) set_worker_count(threads);
        if (*ingest) {
            auto data = pipeline::load(inputs.paths());
            json summary = {{"neighborhoods", data.dataset.neighborhoods.size()},
                            {"edi_records", data.dataset.edi.size()},
                            {"waves", data.dataset.waves()},
                            {"census_profiles", data.dataset.census.size()},
                            {"catalog_variables", data.dataset.catalog.size()},
                            {"approximate_variables", data.approximate_variables},
                            {"unassigned_counts", data.unassigned_counts},
                            {"registrations", data.registrations ? data.registrations->size() : 0},
                            {"digests", data.digests}};
            if (!out_path.empty()) csv::write_text(out_path, serialize_profiles(data.dataset.census, data.dataset.catalog));
            out << summary.dump(2) << "\n";
            return 0;
        }
        if (*stab && !stab_manifest->empty()) {
            out << pipeline::replay(manifest_path, out_dir).dump(2) << "\n";
            return 0;
        }
        if (*ret && !ret_manifest->empty()) {
            out << pipeline::replay(manifest_path, out_dir).dump(2) << "\n";
            return 0;
        }
        if (*serve) {
            std::optional<fs::path> dir;
            if (!data_dir.empty()) {
                dir = data_dir;
            } else if (const char* env = std::getenv("VULNSCAPE_DATA_DIR")) {
                dir = env;
            }
            service::Service svc(dir);
            return service::serve(svc, host, port);
        }

        auto data = pipeline::load(inputs.paths());
        const Dataset& ds = data.dataset;
        if (*embed || *cluster || *validate || *screen) {
            WaveMode mode = analysis.mode(ds);
            auto config = analysis.config(mode);
            auto input = pipeline::prepare(ds, mode, config);
            for (const auto& w : input.warnings) err << "warning: " << w << "\n";
            auto embedding = pipeline::embed_stage(input, config);
            if (*embed) {
                emit(out_path, tables::embedding(embedding), out);
                if (!trace_path.empty()) csv::write_file(trace_path, tables::trace(embedding));
                return 0;
            }
            auto solution = pipeline::cluster_stage(ds, input, embedding, config);
            if (*cluster) {
                emit(out_path, tables::solution(embedding, solution), out);
                return 0;
            }
            if (*validate) {
                emit(out_path, tables::hopkins(pipeline::validate_stage(input, embedding, solution, config)), out);
                return 0;
            }
            if (ds.census.empty()) throw Error(ErrorCode::InvalidArgument, "screening needs census data (catalog plus profiles or DAs)");
            auto results = stats::screen(ds.census, pipeline::neighborhood_labels(solution), config.screening);
            emit(out_path, tables::screening(results, ds.catalog), out);
            return 0;
        }
        if (*stab) {
            auto result = pipeline::run_topdown(data, analysis.config(std::nullopt), fs::path(out_dir));
            out << result.manifest.dump(2) << "\n";
            return 0;
        }
        if (*ret) {
            pipeline::BottomUpConfig config;
            config.policy.min_account_created = parse_date_flag(min_account, "--min-account-created");
            config.policy.min_birth_date = parse_date_flag(min_birth, "--min-birth-date");
            config.policy.require_completed = !include_incomplete;
            config.policy.min_max_registrants_exclusive = policy.min_max_registrants_exclusive;
            auto result = pipeline::run_bottomup(data, config, fs::path(out_dir));
            out << result.manifest.dump(2) << "\n";
            return 0;
        }
        if (*link) {
            if (!data.registrations) throw Error(ErrorCode::InvalidArgument, "link needs registration records");
            auto scale = parse_scale(link_scale);
            if (!scale) throw Error(ErrorCode::InvalidArgument, "unknown --scale '" + link_scale + "'");
            const auto rules = data.rules.value_or(retention::GroupingRules::defaults());
            auto names = rules.groups();
            if (std::find(names.begin(), names.end(), group) == names.end()) {
                throw Error(ErrorCode::InvalidArgument, "unknown --group '" + group + "'");
            }
            auto kept = retention::apply_filters(*data.registrations).kept;
            auto journeys = retention::build_journeys(kept, rules);
            auto result = pipeline::link(ds, journeys, group, *scale, link_wave ? std::optional<int>(link_wave) : std::nullopt);
            if (!out_path.empty()) csv::write_file(out_path, retention::rates_table(result.rates));
            out << json{{"group", group},
                        {"scale", scale_name(*scale)},
                        {"wave", result.wave},
                        {"n", result.correlation.n},
                        {"r", result.correlation.r},
                        {"p_value", result.correlation.p}}
                       .dump(2)
                << "\n";
            return 0;
        }
    } catch (const Error& e) {
        err << "error [" << code_name(e.code()) << "]: " << e.what();
        if (const auto* row = dynamic_cast<const RowError*>(&e)) err << " (line " << row->row() << ", field " << row->field() << ")";
        err << "\n";
        return is_validation(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace vulnscape::cli
